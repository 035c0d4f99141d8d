#include "mce/optimize.hpp"

#include <cmath>
#include <ostream>

namespace mce {

Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                          const Eigen::VectorXd& grad, double learning_rate,
                          const AdamConfig& config) {
  if (state.step == 0) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
  }
  if (state.m.size() != params.size() || grad.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient size mismatch");
  }
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grad;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
  const double bias1 = 1.0 - std::pow(config.beta1, state.step);
  const double bias2 = 1.0 - std::pow(config.beta2, state.step);
  const Eigen::ArrayXd m_hat = state.m.array() / bias1;
  const Eigen::ArrayXd v_hat = state.v.array() / bias2;
  return (params.array() - learning_rate * m_hat / (v_hat.sqrt() + config.eps_hat)).matrix();
}

namespace {

void validate(const Dataset& data, double lambda0, const TrainConfig& config) {
  if (data.n() < 1) throw std::invalid_argument("train: dataset is empty");
  if (!(lambda0 > 0.0)) throw std::invalid_argument("train: lambda0 must be positive");
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("train: bad learning rate");
  if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw std::invalid_argument("train: validation_fraction must lie in [0, 1)");
  }
}

int effective_batch_size(const Dataset& data, const TrainConfig& config) {
  const int n = static_cast<int>(data.n());
  if (config.batch_size <= 0 || config.batch_size > n) return n;
  return config.batch_size;
}

// Split one shuffled batch into its leading training part and trailing
// validation part.
std::pair<std::vector<int>, std::vector<int>> split_batch(const std::vector<int>& batch,
                                                          double validation_fraction) {
  const int len = static_cast<int>(batch.size());
  int n_train = static_cast<int>(std::llround((1.0 - validation_fraction) * len));
  n_train = std::max(1, std::min(len - 1, n_train));
  std::vector<int> train(batch.begin(), batch.begin() + n_train);
  std::vector<int> val(batch.begin() + n_train, batch.end());
  return {std::move(train), std::move(val)};
}

void gather(const Dataset& data, const Eigen::MatrixXd& Y, const std::vector<int>& idx,
            Eigen::MatrixXd& Xb, Eigen::MatrixXd& Yb) {
  Xb.resize(idx.size(), data.dim());
  Yb.resize(idx.size(), Y.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    Xb.row(i) = data.inputs.row(idx[i]);
    Yb.row(i) = Y.row(idx[i]);
  }
}

// The shared loop body: evaluate_grad(params) must return the objective and
// its gradient at the current batch.
template <typename EvalGrad>
TrainTrace run_loop(Eigen::VectorXd& params, const Dataset& data, const TrainConfig& config,
                    std::vector<std::string> param_names, EvalGrad&& evaluate_grad) {
  TrainTrace trace;
  trace.param_names = std::move(param_names);

  const int n = static_cast<int>(data.n());
  const int n_b = effective_batch_size(data, config);
  BatchIterator batches(n, n_b, config.seed);
  const long total_iters =
      static_cast<long>(config.epochs) * batches.batches_per_epoch();
  trace.records.reserve(total_iters);

  AdamState adam;
  const Eigen::MatrixXd Y = one_hot(data.labels, data.num_classes);

  Eigen::MatrixXd Xb, Yb, Xv, Yv;
  for (long iter = 0; iter < total_iters; ++iter) {
    const std::vector<int>& batch = batches.next();

    ObjectiveGrad result;
    if (config.validation_fraction > 0.0 && batch.size() >= 2) {
      auto [train_idx, val_idx] = split_batch(batch, config.validation_fraction);
      gather(data, Y, train_idx, Xb, Yb);
      gather(data, Y, val_idx, Xv, Yv);
      result = evaluate_grad(params, Xb, Yb, &Xv, &Yv);
    } else {
      gather(data, Y, batch, Xb, Yb);
      result = evaluate_grad(params, Xb, Yb, nullptr, nullptr);
    }

    trace.records.push_back(TrainRecord{static_cast<int>(iter), result.value.q,
                                        result.value.empirical_risk, result.value.rcb, params});
    if (!std::isfinite(result.value.q)) {
      throw TrainDivergedError(
          "train: objective became non-finite at iteration " + std::to_string(iter),
          std::move(trace));
    }
    params = adam_step(adam, params, result.grad, config.learning_rate, config.adam);
  }
  return trace;
}

}  // namespace

std::pair<FittedMCE, TrainTrace> train(const KernelSpec& spec0, double lambda0,
                                       const Dataset& data, const TrainConfig& config) {
  validate(data, lambda0, config);
  LossConfig loss{config.epsilon, config.resolved_tau()};

  if (spec0.variant == KernelVariant::gaussian_ard &&
      spec0.log_lengthscales.size() != data.dim()) {
    throw std::invalid_argument("train: ARD lengthscale count does not match data dimension");
  }

  Eigen::VectorXd params(spec0.param_count() + 1);
  params.head(spec0.param_count()) = spec0.params();
  params[params.size() - 1] = std::log(lambda0);

  std::vector<std::string> names = spec0.param_names();
  names.push_back("log_lambda");

  KernelSpec spec = spec0;
  TrainTrace trace = run_loop(
      params, data, config, std::move(names),
      [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& Xb, const Eigen::MatrixXd& Yb,
          const Eigen::MatrixXd* Xv, const Eigen::MatrixXd* Yv) {
        spec = spec.with_params(p.head(p.size() - 1));
        const double lambda = std::exp(p[p.size() - 1]);
        if (Xv) return grad_objective_validated(spec, lambda, Xb, Yb, *Xv, *Yv, loss);
        return grad_objective(spec, lambda, Xb, Yb, loss);
      });

  const KernelSpec final_spec = spec.with_params(params.head(params.size() - 1));
  const double final_lambda = std::exp(params[params.size() - 1]);
  FittedMCE model = fit(final_spec, final_lambda, data.inputs,
                        one_hot(data.labels, data.num_classes));
  model.class_names = data.class_names;
  return {std::move(model), std::move(trace)};
}

std::pair<ExplicitFittedMCE, TrainTrace> train_explicit(const FeatureMap& map0, double lambda0,
                                                        const Dataset& data,
                                                        const TrainConfig& config) {
  validate(data, lambda0, config);
  LossConfig loss{config.epsilon, config.resolved_tau()};
  if (map0.input_dim != data.dim()) {
    throw std::invalid_argument("train_explicit: feature map input dimension mismatch");
  }

  FeatureMap map = map0;
  Eigen::VectorXd params(map.param_count() + 1);
  params.head(map.param_count()) = map.params();
  params[params.size() - 1] = std::log(lambda0);

  std::vector<std::string> names;
  for (int i = 0; i < map.param_count(); ++i) names.push_back("feature_param_" + std::to_string(i));
  names.push_back("log_lambda");

  TrainTrace trace = run_loop(
      params, data, config, std::move(names),
      [&](const Eigen::VectorXd& p, const Eigen::MatrixXd& Xb, const Eigen::MatrixXd& Yb,
          const Eigen::MatrixXd* Xv, const Eigen::MatrixXd* Yv) {
        map.set_params(p.head(p.size() - 1));
        const double lambda = std::exp(p[p.size() - 1]);
        if (Xv) return grad_objective_explicit_validated(map, lambda, Xb, Yb, *Xv, *Yv, loss);
        return grad_objective_explicit(map, lambda, Xb, Yb, loss);
      });

  map.set_params(params.head(params.size() - 1));
  const double final_lambda = std::exp(params[params.size() - 1]);
  ExplicitFittedMCE model =
      fit_explicit(std::make_shared<FeatureMap>(map), final_lambda, data.inputs,
                   one_hot(data.labels, data.num_classes));
  model.class_names = data.class_names;
  return {std::move(model), std::move(trace)};
}

void TrainTrace::to_csv(std::ostream& out) const {
  out << "iteration,q,empirical_risk,rcb";
  for (const auto& name : param_names) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (const auto& rec : records) {
    out << rec.iteration << ',' << rec.q << ',' << rec.empirical_risk << ',' << rec.rcb;
    for (Eigen::Index i = 0; i < rec.params.size(); ++i) out << ',' << rec.params[i];
    out << '\n';
  }
}

}  // namespace mce
