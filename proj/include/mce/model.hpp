#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "mce/dataset.hpp"
#include "mce/kernels.hpp"
#include "mce/linalg.hpp"

namespace mce {

// Multiclass conditional embedding fitted through the n x n Cholesky path:
// V = (K + n lambda I)^{-1} Y, predictions p(x) = V^T k(x).
struct FittedMCE {
  KernelSpec kernel;
  double lambda = 1.0;
  Eigen::MatrixXd X;  // retained (scaled) training inputs, n x d
  Eigen::MatrixXd Y;  // one-hot labels, n x m
  CholFactor chol;    // of K + n lambda I
  Eigen::MatrixXd V;  // n x m

  std::vector<std::string> class_names;
  ScalingParams scaling;  // empty when inputs were consumed as-is

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index num_classes() const { return Y.cols(); }
};

// Explicit-feature counterpart through the p x p factorization:
// W = (Z^T Z + n lambda I_p)^{-1} Z^T Y, predictions p(x) = W^T phi(x).
struct ExplicitFittedMCE {
  std::shared_ptr<const FeatureMap> map;
  double lambda = 1.0;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  CholFactor chol;    // of Z^T Z + n lambda I_p
  Eigen::MatrixXd W;  // p x m

  std::vector<std::string> class_names;
  ScalingParams scaling;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index num_classes() const { return Y.cols(); }
};

FittedMCE fit(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X,
              const Eigen::MatrixXd& Y);
ExplicitFittedMCE fit_explicit(std::shared_ptr<const FeatureMap> map, double lambda,
                               const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Raw decision-probability estimates; entries may leave [0, 1].
Eigen::MatrixXd predict_proba(const FittedMCE& model, const Eigen::MatrixXd& X_query);
Eigen::MatrixXd predict_proba(const ExplicitFittedMCE& model, const Eigen::MatrixXd& X_query);

// max{p_c, 0} / sum_j max{p_j, 0}; all-nonpositive input maps to uniform.
Eigen::VectorXd clip_normalize(const Eigen::VectorXd& p);
Eigen::MatrixXd clip_normalize_rows(const Eigen::MatrixXd& P);

// argmax of the raw estimates; ties break to the lowest class index.
int argmax_label(const Eigen::VectorXd& p);
Eigen::VectorXi predict_label(const FittedMCE& model, const Eigen::MatrixXd& X_query);
Eigen::VectorXi predict_label(const ExplicitFittedMCE& model, const Eigen::MatrixXd& X_query);

// g^T (K + n lambda I)^{-1} k(x) per query, g given at the training points.
Eigen::VectorXd conditional_expectation(const FittedMCE& model, const Eigen::VectorXd& g,
                                        const Eigen::MatrixXd& X_query);
Eigen::VectorXd conditional_expectation(const ExplicitFittedMCE& model,
                                        const Eigen::VectorXd& g,
                                        const Eigen::MatrixXd& X_query);

// Rademacher complexity bound r = alpha(theta) sqrt(trace(V^T K V)); the
// explicit path uses alpha(theta) ||W||_F, and the two agree for linear
// feature kernels.
double rcb(const FittedMCE& model);
double rcb(const ExplicitFittedMCE& model);
double rcb(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X_batch,
           const Eigen::MatrixXd& Y_batch);

// Entropy of the clip-normalized estimates, -sum p~ log p~ with 0 log 0 := 0.
Eigen::VectorXd entropy_clipnorm(const FittedMCE& model, const Eigen::MatrixXd& X_query);
Eigen::VectorXd entropy_clipnorm(const ExplicitFittedMCE& model,
                                 const Eigen::MatrixXd& X_query);

// Embedding-based entropy estimate <mu, u> with u(y_i) = -log p_{y_i}(x)
// where positive, else 0. May go slightly negative.
Eigen::VectorXd entropy_embedding(const FittedMCE& model, const Eigen::MatrixXd& X_query);
Eigen::VectorXd entropy_embedding(const ExplicitFittedMCE& model,
                                  const Eigen::MatrixXd& X_query);

}  // namespace mce
