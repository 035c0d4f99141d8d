#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "json.hpp"

namespace mce {

// Explicit feature maps phi : R^d -> R^p. The mlp variant is a fully
// connected network with ReLU on every layer, output layer included.
// Parameters flatten in a fixed order: per layer, W row-major then b.
struct FeatureMap {
  enum class Variant { identity, mlp };

  Variant variant = Variant::identity;
  int input_dim = 0;
  std::vector<Eigen::MatrixXd> weights;  // W_j: width_j x width_{j-1}
  std::vector<Eigen::VectorXd> biases;   // b_j: width_j

  int output_dim() const;
  int param_count() const;
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& flat);
  std::vector<int> layer_sizes() const;  // [input_dim, widths...]

  nlohmann::json to_json() const;
  static FeatureMap from_json(const nlohmann::json& j);
};

FeatureMap identity_map(int input_dim);

// Biases 0.1; weights zero-mean truncated normal with stddev 0.1, truncated
// at two standard deviations. Deterministic per seed.
FeatureMap init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Forward activations retained for the pullback in feature_backward.
struct FeatureForward {
  const FeatureMap* map = nullptr;
  Eigen::MatrixXd input;                  // n x d
  std::vector<Eigen::MatrixXd> preacts;   // per layer, n x width
  std::vector<Eigen::MatrixXd> acts;      // relu(preacts)
};

// Returns phi(x_i) stacked as rows (n x p). Pass a bundle to enable backward.
Eigen::MatrixXd feature_forward(const FeatureMap& map, const Eigen::MatrixXd& X,
                                FeatureForward* bundle = nullptr);

// Exact gradient of sum_{i,k} upstream(i,k) * phi(x_i)_k w.r.t. every
// parameter; the ReLU subgradient at 0 is taken as 0.
Eigen::VectorXd feature_backward(const FeatureForward& bundle,
                                 const Eigen::MatrixXd& upstream);

}  // namespace mce
