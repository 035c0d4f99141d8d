#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "mce/features.hpp"

namespace mce {

enum class KernelVariant { gaussian_iso, gaussian_ard, linear_features };

// Positive hyperparameters live in log space so unconstrained gradient steps
// cannot leave the feasible set.
struct KernelSpec {
  KernelVariant variant = KernelVariant::gaussian_iso;
  double log_sigma_f = 0.0;
  Eigen::VectorXd log_lengthscales;  // size 1 (iso) or d (ard)
  std::shared_ptr<const FeatureMap> feature_map;  // linear_features only

  double sigma_f() const { return std::exp(log_sigma_f); }
  Eigen::VectorXd lengthscales() const { return log_lengthscales.array().exp(); }

  // Trainable kernel parameters as a flat vector: gaussian variants expose
  // [log_sigma_f, log_lengthscales...]; linear_features exposes the feature
  // map parameters.
  int param_count() const;
  Eigen::VectorXd params() const;
  // Copy with updated parameters (the feature map is cloned, not shared).
  KernelSpec with_params(const Eigen::VectorXd& p) const;
  std::vector<std::string> param_names() const;

  nlohmann::json to_json() const;
  static KernelSpec from_json(const nlohmann::json& j);
};

KernelSpec make_gaussian_iso(double sigma_f, double lengthscale);
KernelSpec make_gaussian_ard(double sigma_f, const Eigen::VectorXd& lengthscales);
KernelSpec make_linear_features(std::shared_ptr<const FeatureMap> map);

// k(x, x') = sigma_f^2 exp(-sum_j (x_j - x'_j)^2 / (2 l_j^2)) for gaussian
// variants; <phi(x), phi(x')> for linear_features.
Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X);

// Rows are queries, columns training points: out(q, t) = k(x_q, x_t).
Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                           const Eigen::MatrixXd& X_query);

// Entrywise dK / d(log theta_j). Index 0 is log sigma_f, 1.. are the
// log lengthscales. linear_features has no log-space kernel hyperparameters.
Eigen::MatrixXd grad_gram(const KernelSpec& spec, const Eigen::MatrixXd& X, int param_index);
Eigen::MatrixXd grad_cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                                const Eigen::MatrixXd& X_query, int param_index);

// Feature-norm bound alpha(theta): sigma_f for stationary kernels,
// max_i ||phi(x_i)|| over the batch for linear_features.
double alpha_bound(const KernelSpec& spec, const Eigen::MatrixXd& X_batch);

// Per-dimension inverse squared lengthscales expanded to d entries.
Eigen::VectorXd sqdist_weights(const KernelSpec& spec, Eigen::Index d);

}  // namespace mce
