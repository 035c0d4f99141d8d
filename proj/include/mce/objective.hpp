#pragma once

#include <Eigen/Dense>

#include "mce/features.hpp"
#include "mce/kernels.hpp"

namespace mce {

inline constexpr double kFourE = 4.0 * 2.718281828459045235360287471352662498;

// epsilon clips the cross entropy loss; tau multiplies the complexity bound
// (4e for the single-batch objective; batch-validated runs typically use a
// smaller value).
struct LossConfig {
  double epsilon = 1e-15;
  double tau = kFourE;
};

struct ObjectiveValue {
  double q = 0.0;
  double empirical_risk = 0.0;
  double rcb = 0.0;
};

// Flat gradient over [kernel log-parameters or feature-map parameters...,
// log lambda].
struct ObjectiveGrad {
  ObjectiveValue value;
  Eigen::VectorXd grad;
};

// -log [f_y]_eps^1 with [.]_eps^1 = min{max{., eps}, 1}, applied to the raw
// probability estimates.
double cross_entropy_clipped(double f_y, double epsilon);
double cross_entropy_clipped(int label, const Eigen::VectorXd& p, double epsilon);

// Fits on the batch (n_b lambda inside the inverse), evaluates the mean
// clipped loss on the same batch, and adds tau * r(theta, lambda).
ObjectiveValue objective(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X_batch,
                         const Eigen::MatrixXd& Y_batch, const LossConfig& config);

// Fit and RCB on the training sub-batch; risk on the validation sub-batch.
ObjectiveValue objective_validated(const KernelSpec& spec, double lambda,
                                   const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                                   const Eigen::MatrixXd& X_val, const Eigen::MatrixXd& Y_val,
                                   const LossConfig& config);

ObjectiveGrad grad_objective(const KernelSpec& spec, double lambda,
                             const Eigen::MatrixXd& X_batch, const Eigen::MatrixXd& Y_batch,
                             const LossConfig& config);

ObjectiveGrad grad_objective_validated(const KernelSpec& spec, double lambda,
                                       const Eigen::MatrixXd& X_train,
                                       const Eigen::MatrixXd& Y_train,
                                       const Eigen::MatrixXd& X_val,
                                       const Eigen::MatrixXd& Y_val, const LossConfig& config);

// Explicit-feature path: p x p factorization, r = alpha(theta) ||W||_F,
// gradients flow through feature_backward.
ObjectiveValue objective_explicit(const FeatureMap& map, double lambda,
                                  const Eigen::MatrixXd& X_batch, const Eigen::MatrixXd& Y_batch,
                                  const LossConfig& config);

ObjectiveValue objective_explicit_validated(const FeatureMap& map, double lambda,
                                            const Eigen::MatrixXd& X_train,
                                            const Eigen::MatrixXd& Y_train,
                                            const Eigen::MatrixXd& X_val,
                                            const Eigen::MatrixXd& Y_val,
                                            const LossConfig& config);

ObjectiveGrad grad_objective_explicit(const FeatureMap& map, double lambda,
                                      const Eigen::MatrixXd& X_batch,
                                      const Eigen::MatrixXd& Y_batch, const LossConfig& config);

ObjectiveGrad grad_objective_explicit_validated(const FeatureMap& map, double lambda,
                                                const Eigen::MatrixXd& X_train,
                                                const Eigen::MatrixXd& Y_train,
                                                const Eigen::MatrixXd& X_val,
                                                const Eigen::MatrixXd& Y_val,
                                                const LossConfig& config);

}  // namespace mce
