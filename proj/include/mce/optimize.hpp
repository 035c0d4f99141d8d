#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mce/dataset.hpp"
#include "mce/model.hpp"
#include "mce/objective.hpp"

namespace mce {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  long step = 0;
};

// One bias-corrected Adam update; returns the new parameter vector.
Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& params,
                          const Eigen::VectorXd& grad, double learning_rate,
                          const AdamConfig& config = {});

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 1000;
  int batch_size = 0;  // 0 means full-gradient (n_b = n)
  std::uint64_t seed = 0;
  double epsilon = 1e-15;
  // Unset: 4e in single-batch mode, 1.0 in batch-validated mode.
  std::optional<double> tau;
  double validation_fraction = 0.0;
  AdamConfig adam;

  double resolved_tau() const {
    if (tau) return *tau;
    return validation_fraction > 0.0 ? 1.0 : kFourE;
  }
};

struct TrainRecord {
  int iteration = 0;
  double q = 0.0;
  double empirical_risk = 0.0;
  double rcb = 0.0;
  Eigen::VectorXd params;  // snapshot at evaluation time, before the update
};

struct TrainTrace {
  std::vector<std::string> param_names;  // kernel/feature params then log_lambda
  std::vector<TrainRecord> records;

  double initial_q() const { return records.front().q; }
  double final_q() const { return records.back().q; }
  void to_csv(std::ostream& out) const;
};

// Thrown when the objective turns non-finite; carries the trace so far.
struct TrainDivergedError : std::runtime_error {
  TrainDivergedError(const std::string& what, TrainTrace partial)
      : std::runtime_error(what), trace(std::move(partial)) {}
  TrainTrace trace;
};

// Batch-stochastic hyperparameter learning for implicit kernels: per batch,
// fit -> probabilities -> RCB -> q -> Adam update over the log-parameters;
// afterwards one fit on the full training set with the learned values.
std::pair<FittedMCE, TrainTrace> train(const KernelSpec& spec0, double lambda0,
                                       const Dataset& data, const TrainConfig& config);

// Same loop through the p x p explicit-feature factorization.
std::pair<ExplicitFittedMCE, TrainTrace> train_explicit(const FeatureMap& map0, double lambda0,
                                                        const Dataset& data,
                                                        const TrainConfig& config);

}  // namespace mce
