#include "mce/features.hpp"

#include <stdexcept>

#include "mce/rng.hpp"

namespace mce {

int FeatureMap::output_dim() const {
  if (variant == Variant::identity) return input_dim;
  return static_cast<int>(weights.back().rows());
}

int FeatureMap::param_count() const {
  int count = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    count += static_cast<int>(weights[j].size() + biases[j].size());
  }
  return count;
}

Eigen::VectorXd FeatureMap::params() const {
  Eigen::VectorXd flat(param_count());
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const auto& W = weights[j];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) flat[pos++] = W(r, c);
    }
    for (Eigen::Index r = 0; r < biases[j].size(); ++r) flat[pos++] = biases[j][r];
  }
  return flat;
}

void FeatureMap::set_params(const Eigen::VectorXd& flat) {
  if (flat.size() != param_count()) {
    throw std::invalid_argument("FeatureMap::set_params: expected " +
                                std::to_string(param_count()) + " parameters, got " +
                                std::to_string(flat.size()));
  }
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    auto& W = weights[j];
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = flat[pos++];
    }
    for (Eigen::Index r = 0; r < biases[j].size(); ++r) biases[j][r] = flat[pos++];
  }
}

std::vector<int> FeatureMap::layer_sizes() const {
  std::vector<int> sizes{input_dim};
  for (const auto& W : weights) sizes.push_back(static_cast<int>(W.rows()));
  return sizes;
}

nlohmann::json FeatureMap::to_json() const {
  nlohmann::json j;
  j["variant"] = (variant == Variant::identity) ? "identity" : "mlp";
  j["layer_sizes"] = layer_sizes();
  return j;
}

FeatureMap FeatureMap::from_json(const nlohmann::json& j) {
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (j.at("variant") == "identity") {
    return identity_map(sizes.at(0));
  }
  FeatureMap map;
  map.variant = Variant::mlp;
  map.input_dim = sizes.at(0);
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    map.weights.emplace_back(Eigen::MatrixXd::Zero(sizes[l], sizes[l - 1]));
    map.biases.emplace_back(Eigen::VectorXd::Zero(sizes[l]));
  }
  return map;
}

FeatureMap identity_map(int input_dim) {
  FeatureMap map;
  map.variant = FeatureMap::Variant::identity;
  map.input_dim = input_dim;
  return map;
}

FeatureMap init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("init_mlp: need [input_dim, width...] with at least one layer");
  }
  FeatureMap map;
  map.variant = FeatureMap::Variant::mlp;
  map.input_dim = layer_sizes[0];
  Rng rng(seed);
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    Eigen::MatrixXd W(layer_sizes[l], layer_sizes[l - 1]);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        W(r, c) = rng.truncated_normal(0.1, 2.0);
      }
    }
    map.weights.push_back(std::move(W));
    map.biases.emplace_back(Eigen::VectorXd::Constant(layer_sizes[l], 0.1));
  }
  return map;
}

Eigen::MatrixXd feature_forward(const FeatureMap& map, const Eigen::MatrixXd& X,
                                FeatureForward* bundle) {
  if (X.cols() != map.input_dim) {
    throw std::invalid_argument("feature_forward: input has " + std::to_string(X.cols()) +
                                " columns, map expects " + std::to_string(map.input_dim));
  }
  if (bundle) {
    bundle->map = &map;
    bundle->input = X;
    bundle->preacts.clear();
    bundle->acts.clear();
  }
  if (map.variant == FeatureMap::Variant::identity) {
    return X;
  }
  Eigen::MatrixXd act = X;
  for (std::size_t j = 0; j < map.weights.size(); ++j) {
    Eigen::MatrixXd pre = act * map.weights[j].transpose();
    pre.rowwise() += map.biases[j].transpose();
    act = pre.cwiseMax(0.0);
    if (bundle) {
      bundle->preacts.push_back(std::move(pre));
      bundle->acts.push_back(act);
    }
  }
  return act;
}

Eigen::VectorXd feature_backward(const FeatureForward& bundle, const Eigen::MatrixXd& upstream) {
  const FeatureMap& map = *bundle.map;
  if (map.variant == FeatureMap::Variant::identity) {
    return Eigen::VectorXd();
  }
  if (upstream.rows() != bundle.input.rows() || upstream.cols() != map.output_dim()) {
    throw std::invalid_argument("feature_backward: upstream shape mismatch");
  }

  const std::size_t n_layers = map.weights.size();
  std::vector<Eigen::MatrixXd> grad_W(n_layers);
  std::vector<Eigen::VectorXd> grad_b(n_layers);

  Eigen::MatrixXd delta = upstream;
  for (std::size_t j = n_layers; j-- > 0;) {
    // ReLU mask; subgradient at exactly 0 is 0
    delta.array() *= (bundle.preacts[j].array() > 0.0).cast<double>();
    const Eigen::MatrixXd& prev = (j == 0) ? bundle.input : bundle.acts[j - 1];
    grad_W[j] = delta.transpose() * prev;
    grad_b[j] = delta.colwise().sum();
    if (j > 0) delta = (delta * map.weights[j]).eval();
  }

  Eigen::VectorXd flat(map.param_count());
  Eigen::Index pos = 0;
  for (std::size_t j = 0; j < n_layers; ++j) {
    for (Eigen::Index r = 0; r < grad_W[j].rows(); ++r) {
      for (Eigen::Index c = 0; c < grad_W[j].cols(); ++c) flat[pos++] = grad_W[j](r, c);
    }
    for (Eigen::Index r = 0; r < grad_b[j].size(); ++r) flat[pos++] = grad_b[j][r];
  }
  return flat;
}

}  // namespace mce
