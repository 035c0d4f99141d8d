#include "mce/kernels.hpp"

#include <stdexcept>

#include "mce/compute.hpp"

namespace mce {

int KernelSpec::param_count() const {
  if (variant == KernelVariant::linear_features) return feature_map->param_count();
  return 1 + static_cast<int>(log_lengthscales.size());
}

Eigen::VectorXd KernelSpec::params() const {
  if (variant == KernelVariant::linear_features) return feature_map->params();
  Eigen::VectorXd p(param_count());
  p[0] = log_sigma_f;
  p.tail(log_lengthscales.size()) = log_lengthscales;
  return p;
}

KernelSpec KernelSpec::with_params(const Eigen::VectorXd& p) const {
  if (p.size() != param_count()) {
    throw std::invalid_argument("KernelSpec::with_params: expected " +
                                std::to_string(param_count()) + " parameters, got " +
                                std::to_string(p.size()));
  }
  KernelSpec out = *this;
  if (variant == KernelVariant::linear_features) {
    auto map = std::make_shared<FeatureMap>(*feature_map);
    map->set_params(p);
    out.feature_map = std::move(map);
  } else {
    out.log_sigma_f = p[0];
    out.log_lengthscales = p.tail(log_lengthscales.size());
  }
  return out;
}

std::vector<std::string> KernelSpec::param_names() const {
  std::vector<std::string> names;
  if (variant == KernelVariant::linear_features) {
    for (int i = 0; i < feature_map->param_count(); ++i) {
      names.push_back("feature_param_" + std::to_string(i));
    }
    return names;
  }
  names.push_back("log_sigma_f");
  if (log_lengthscales.size() == 1) {
    names.push_back("log_lengthscale");
  } else {
    for (Eigen::Index j = 0; j < log_lengthscales.size(); ++j) {
      names.push_back("log_lengthscale_" + std::to_string(j));
    }
  }
  return names;
}

nlohmann::json KernelSpec::to_json() const {
  nlohmann::json j;
  switch (variant) {
    case KernelVariant::gaussian_iso:
      j["variant"] = "gaussian_iso";
      break;
    case KernelVariant::gaussian_ard:
      j["variant"] = "gaussian_ard";
      break;
    case KernelVariant::linear_features:
      j["variant"] = "linear_features";
      j["feature_map"] = feature_map->to_json();
      return j;
  }
  j["log_sigma_f"] = log_sigma_f;
  j["log_lengthscales"] = std::vector<double>(log_lengthscales.data(),
                                              log_lengthscales.data() + log_lengthscales.size());
  return j;
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant");
  if (variant == "linear_features") {
    auto map = std::make_shared<FeatureMap>(FeatureMap::from_json(j.at("feature_map")));
    return make_linear_features(std::move(map));
  }
  KernelSpec spec;
  spec.variant = (variant == "gaussian_iso") ? KernelVariant::gaussian_iso
                                             : KernelVariant::gaussian_ard;
  spec.log_sigma_f = j.at("log_sigma_f").get<double>();
  const auto ells = j.at("log_lengthscales").get<std::vector<double>>();
  spec.log_lengthscales = Eigen::Map<const Eigen::VectorXd>(ells.data(), ells.size());
  return spec;
}

KernelSpec make_gaussian_iso(double sigma_f, double lengthscale) {
  KernelSpec spec;
  spec.variant = KernelVariant::gaussian_iso;
  spec.log_sigma_f = std::log(sigma_f);
  spec.log_lengthscales = Eigen::VectorXd::Constant(1, std::log(lengthscale));
  return spec;
}

KernelSpec make_gaussian_ard(double sigma_f, const Eigen::VectorXd& lengthscales) {
  KernelSpec spec;
  spec.variant = KernelVariant::gaussian_ard;
  spec.log_sigma_f = std::log(sigma_f);
  spec.log_lengthscales = lengthscales.array().log();
  return spec;
}

KernelSpec make_linear_features(std::shared_ptr<const FeatureMap> map) {
  KernelSpec spec;
  spec.variant = KernelVariant::linear_features;
  spec.feature_map = std::move(map);
  return spec;
}

Eigen::VectorXd sqdist_weights(const KernelSpec& spec, Eigen::Index d) {
  Eigen::VectorXd w(d);
  if (spec.variant == KernelVariant::gaussian_iso) {
    const double ell = std::exp(spec.log_lengthscales[0]);
    w.setConstant(1.0 / (ell * ell));
  } else {
    if (spec.log_lengthscales.size() != d) {
      throw std::invalid_argument("ARD kernel has " +
                                  std::to_string(spec.log_lengthscales.size()) +
                                  " lengthscales but data has " + std::to_string(d) +
                                  " attributes");
    }
    w = (-2.0 * spec.log_lengthscales.array()).exp();
  }
  return w;
}

namespace {

void check_dim(const KernelSpec& spec, Eigen::Index d) {
  if (spec.variant == KernelVariant::gaussian_ard && spec.log_lengthscales.size() != d) {
    throw std::invalid_argument("ARD kernel lengthscale count mismatch");
  }
  if (spec.variant == KernelVariant::linear_features && spec.feature_map->input_dim != d) {
    throw std::invalid_argument("feature map input dimension mismatch");
  }
}

}  // namespace

Eigen::MatrixXd gram(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  check_dim(spec, X.cols());
  if (spec.variant == KernelVariant::linear_features) {
    const Eigen::MatrixXd Z = feature_forward(*spec.feature_map, X);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(X.rows(), X.rows());
    K.selfadjointView<Eigen::Lower>().rankUpdate(Z);
    compute::symmetrize_from_lower(K);
    return K;
  }
  const double sf = spec.sigma_f();
  return compute::gaussian_gram(X, X, sqdist_weights(spec, X.cols()), sf * sf);
}

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                           const Eigen::MatrixXd& X_query) {
  if (X_train.cols() != X_query.cols()) {
    throw std::invalid_argument("cross_gram: attribute count mismatch");
  }
  check_dim(spec, X_train.cols());
  if (spec.variant == KernelVariant::linear_features) {
    const Eigen::MatrixXd Zt = feature_forward(*spec.feature_map, X_train);
    const Eigen::MatrixXd Zq = feature_forward(*spec.feature_map, X_query);
    return Zq * Zt.transpose();
  }
  const double sf = spec.sigma_f();
  return compute::gaussian_gram(X_query, X_train, sqdist_weights(spec, X_train.cols()),
                                sf * sf);
}

Eigen::MatrixXd grad_cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X_train,
                                const Eigen::MatrixXd& X_query, int param_index) {
  if (spec.variant == KernelVariant::linear_features) {
    throw std::invalid_argument(
        "grad_gram: linear_features kernels have no log-space hyperparameters");
  }
  if (param_index < 0 || param_index >= spec.param_count()) {
    throw std::invalid_argument("grad_gram: parameter index " + std::to_string(param_index) +
                                " out of range");
  }
  Eigen::MatrixXd K = cross_gram(spec, X_train, X_query);
  if (param_index == 0) {
    return 2.0 * K;  // dK / d log sigma_f
  }
  // dK / d log l_j = K .* D_j / l_j^2
  const Eigen::Index d = X_train.cols();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  if (spec.variant == KernelVariant::gaussian_iso) {
    const double ell = std::exp(spec.log_lengthscales[0]);
    w.setConstant(1.0 / (ell * ell));
  } else {
    const int j = param_index - 1;
    const double ell = std::exp(spec.log_lengthscales[j]);
    w[j] = 1.0 / (ell * ell);
  }
  return K.cwiseProduct(compute::pairwise_sqdist(X_query, X_train, w));
}

Eigen::MatrixXd grad_gram(const KernelSpec& spec, const Eigen::MatrixXd& X, int param_index) {
  return grad_cross_gram(spec, X, X, param_index);
}

double alpha_bound(const KernelSpec& spec, const Eigen::MatrixXd& X_batch) {
  if (spec.variant != KernelVariant::linear_features) {
    return spec.sigma_f();
  }
  if (X_batch.rows() == 0) {
    throw std::invalid_argument("alpha_bound: linear_features kernel needs a nonempty batch");
  }
  const Eigen::MatrixXd Z = feature_forward(*spec.feature_map, X_batch);
  return Z.rowwise().norm().maxCoeff();
}

}  // namespace mce
