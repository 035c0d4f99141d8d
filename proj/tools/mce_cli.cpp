#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mce/cli_commands.hpp"

namespace {

using mce::cli::RunConfig;

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return RunConfig::from_json(j);
}

// Flags shared by train and benchmark; each option carries both the short
// spelling from the interface contract and the dotted config-field name.
void add_train_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--data,--data.path", cfg.data.path, "dataset path");
  cmd->add_option("--format,--data.format", cfg.data.format, "csv or idx");
  cmd->add_option("--label-col,--data.label_col", cfg.data.label_col,
                  "label column name, or 'last'");
  cmd->add_option("--idx-images,--data.idx_images", cfg.data.idx_images, "IDX image file");
  cmd->add_option("--idx-labels,--data.idx_labels", cfg.data.idx_labels, "IDX label file");
  cmd->add_option("--limit,--data.limit", cfg.data.limit, "keep only the first N items");
  cmd->add_option("--kernel,--kernel.type", cfg.kernel.type,
                  "gaussian-iso | gaussian-ard | linear-mlp");
  cmd->add_option("--layers,--kernel.layers", cfg.kernel.layers,
                  "hidden+output widths for linear-mlp")
      ->delimiter(',');
  cmd->add_option("--sigma-f,--kernel.init_sigma_f", cfg.kernel.init_sigma_f,
                  "initial sensitivity");
  cmd->add_option("--lengthscale,--kernel.init_lengthscale", cfg.kernel.init_lengthscale,
                  "initial lengthscale");
  cmd->add_option("--lambda,--kernel.init_lambda", cfg.kernel.init_lambda,
                  "initial regularization");
  cmd->add_option("--lr,--train.lr", cfg.train.lr, "Adam learning rate");
  cmd->add_option("--epochs,--train.epochs", cfg.train.epochs, "training epochs");
  cmd->add_option("--batch-size,--train.batch_size", cfg.train.batch_size,
                  "batch size (0 = full gradient)");
  cmd->add_option("--epsilon,--train.epsilon", cfg.train.epsilon, "loss clipping threshold");
  cmd->add_option_function<double>(
      "--tau,--train.tau", [&cfg](double v) { cfg.train.tau = v; },
      "RCB multiplier (default 4e, or 1.0 with batch validation)");
  cmd->add_option("--validation-fraction,--train.validation_fraction",
                  cfg.train.validation_fraction, "within-batch validation fraction");
  cmd->add_option("--tuner", cfg.tuner, "rcb | erm | cv | med");
  cmd->add_option("--folds,--cv.folds", cfg.cv.folds, "cross-validation folds");
  cmd->add_option("--seed,--train.seed", cfg.train.seed, "master RNG seed");
  cmd->add_option("--out-model,--out.model", cfg.out.model, "model output path");
  cmd->add_option("--out-metrics,--out.metrics", cfg.out.metrics, "metrics JSON output path");
  cmd->add_option("--out-trace,--out.trace", cfg.out.trace, "trace CSV output path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiclass conditional embedding trainer"};
  app.require_subcommand(1);

  // --config is parsed up front so flags can override file values
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
  }
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::string config_sink;

  auto* train_cmd = app.add_subcommand("train", "learn hyperparameters and fit a model");
  train_cmd->add_option("--config", config_sink, "JSON config file");
  add_train_flags(train_cmd, cfg);
  train_cmd->add_option("--test-fraction", cfg.test_fraction, "holdout fraction for metrics");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a saved model on a dataset");
  std::string model_path, out_metrics;
  double eval_epsilon = 1e-15;
  eval_cmd->add_option("--model", model_path, "model file")->required();
  eval_cmd->add_option("--data,--data.path", cfg.data.path, "dataset path");
  eval_cmd->add_option("--format,--data.format", cfg.data.format, "csv or idx");
  eval_cmd->add_option("--label-col,--data.label_col", cfg.data.label_col, "label column");
  eval_cmd->add_option("--idx-images,--data.idx_images", cfg.data.idx_images, "IDX image file");
  eval_cmd->add_option("--idx-labels,--data.idx_labels", cfg.data.idx_labels, "IDX label file");
  eval_cmd->add_option("--limit,--data.limit", cfg.data.limit, "keep only the first N items");
  eval_cmd->add_option("--epsilon", eval_epsilon, "loss clipping threshold");
  eval_cmd->add_option("--out-metrics,--out.metrics", out_metrics, "metrics JSON output path");

  auto* bench_cmd = app.add_subcommand("benchmark", "tuner x dataset fold protocol");
  bench_cmd->add_option("--config", config_sink, "JSON config file");
  add_train_flags(bench_cmd, cfg);
  bench_cmd->add_option("--bench-folds,--benchmark.folds", cfg.benchmark.folds,
                        "outer protocol folds");
  bench_cmd->add_option("--tuners,--benchmark.tuners", cfg.benchmark.tuners,
                        "tuner rows to run")
      ->delimiter(',');
  bench_cmd->add_option("--out-csv,--out.csv", cfg.out.csv, "table CSV output");
  bench_cmd->add_option("--out-json,--out.json", cfg.out.json, "table JSON output");

  auto* map_cmd = app.add_subcommand("entropy-map", "probability/entropy grid for 2-d models");
  std::string map_model, map_out;
  double grid_min = -0.5, grid_max = 1.05;
  int grid_n = 100;
  map_cmd->add_option("--model", map_model, "model file")->required();
  map_cmd->add_option("--out", map_out, "grid CSV output")->required();
  map_cmd->add_option("--grid-min", grid_min, "grid lower bound");
  map_cmd->add_option("--grid-max", grid_max, "grid upper bound");
  map_cmd->add_option("--grid-n", grid_n, "grid resolution per axis");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return mce::cli::cmd_train(cfg);
    if (eval_cmd->parsed()) {
      return mce::cli::cmd_evaluate(model_path, cfg.data, eval_epsilon, out_metrics);
    }
    if (bench_cmd->parsed()) return mce::cli::cmd_benchmark(cfg);
    if (map_cmd->parsed()) {
      return mce::cli::cmd_entropy_map(map_model, map_out, grid_min, grid_max, grid_n);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
