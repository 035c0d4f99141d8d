#include "mce/cli_commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "mce/baselines.hpp"
#include "mce/model_io.hpp"
#include "mce/optimize.hpp"

namespace mce::cli {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
void maybe_get(const nlohmann::json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

std::string resolve_data_path(const std::string& path) {
  if (path.empty() || fs::exists(path)) return path;
  if (const char* dir = std::getenv("MCE_DATA_DIR")) {
    const fs::path joined = fs::path(dir) / path;
    if (fs::exists(joined)) return joined.string();
  }
  return path;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["data"] = {{"path", data.path},       {"format", data.format},
               {"label_col", data.label_col}, {"idx_images", data.idx_images},
               {"idx_labels", data.idx_labels}, {"limit", data.limit}};
  j["kernel"] = {{"type", kernel.type},
                 {"layers", kernel.layers},
                 {"init_sigma_f", kernel.init_sigma_f},
                 {"init_lengthscale", kernel.init_lengthscale},
                 {"init_lambda", kernel.init_lambda}};
  j["train"] = {{"lr", train.lr},
                {"epochs", train.epochs},
                {"batch_size", train.batch_size},
                {"seed", train.seed},
                {"epsilon", train.epsilon},
                {"validation_fraction", train.validation_fraction}};
  if (train.tau) j["train"]["tau"] = *train.tau;
  j["cv"] = {{"folds", cv.folds},         {"sigma_f_grid", cv.sigma_f_grid},
             {"ell_lo", cv.ell_lo},       {"ell_hi", cv.ell_hi},
             {"ell_count", cv.ell_count}, {"lambda_lo", cv.lambda_lo},
             {"lambda_hi", cv.lambda_hi}, {"lambda_count", cv.lambda_count}};
  j["benchmark"] = nlohmann::json{{"tuners", benchmark.tuners}, {"folds", benchmark.folds}};
  j["benchmark"]["datasets"] = nlohmann::json::array();
  for (const auto& ds : benchmark.datasets) {
    j["benchmark"]["datasets"].push_back(
        {{"name", ds.name},
         {"data",
          {{"path", ds.data.path},
           {"format", ds.data.format},
           {"label_col", ds.data.label_col},
           {"idx_images", ds.data.idx_images},
           {"idx_labels", ds.data.idx_labels},
           {"limit", ds.data.limit}}}});
  }
  j["out"] = {{"model", out.model},
              {"metrics", out.metrics},
              {"trace", out.trace},
              {"csv", out.csv},
              {"json", out.json}};
  j["tuner"] = tuner;
  j["test_fraction"] = test_fraction;
  return j;
}

namespace {

DataConfig data_config_from_json(const nlohmann::json& j) {
  DataConfig d;
  maybe_get(j, "path", d.path);
  maybe_get(j, "format", d.format);
  maybe_get(j, "label_col", d.label_col);
  maybe_get(j, "idx_images", d.idx_images);
  maybe_get(j, "idx_labels", d.idx_labels);
  maybe_get(j, "limit", d.limit);
  return d;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("data")) c.data = data_config_from_json(j.at("data"));
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    maybe_get(k, "type", c.kernel.type);
    maybe_get(k, "layers", c.kernel.layers);
    maybe_get(k, "init_sigma_f", c.kernel.init_sigma_f);
    maybe_get(k, "init_lengthscale", c.kernel.init_lengthscale);
    maybe_get(k, "init_lambda", c.kernel.init_lambda);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    maybe_get(t, "lr", c.train.lr);
    maybe_get(t, "epochs", c.train.epochs);
    maybe_get(t, "batch_size", c.train.batch_size);
    maybe_get(t, "seed", c.train.seed);
    maybe_get(t, "epsilon", c.train.epsilon);
    maybe_get(t, "validation_fraction", c.train.validation_fraction);
    if (t.contains("tau") && !t.at("tau").is_null()) c.train.tau = t.at("tau").get<double>();
  }
  if (j.contains("cv")) {
    const auto& v = j.at("cv");
    maybe_get(v, "folds", c.cv.folds);
    maybe_get(v, "sigma_f_grid", c.cv.sigma_f_grid);
    maybe_get(v, "ell_lo", c.cv.ell_lo);
    maybe_get(v, "ell_hi", c.cv.ell_hi);
    maybe_get(v, "ell_count", c.cv.ell_count);
    maybe_get(v, "lambda_lo", c.cv.lambda_lo);
    maybe_get(v, "lambda_hi", c.cv.lambda_hi);
    maybe_get(v, "lambda_count", c.cv.lambda_count);
  }
  if (j.contains("benchmark")) {
    const auto& b = j.at("benchmark");
    maybe_get(b, "tuners", c.benchmark.tuners);
    maybe_get(b, "folds", c.benchmark.folds);
    if (b.contains("datasets")) {
      for (const auto& e : b.at("datasets")) {
        BenchmarkDataset ds;
        maybe_get(e, "name", ds.name);
        if (e.contains("data")) ds.data = data_config_from_json(e.at("data"));
        c.benchmark.datasets.push_back(std::move(ds));
      }
    }
  }
  if (j.contains("out")) {
    const auto& o = j.at("out");
    maybe_get(o, "model", c.out.model);
    maybe_get(o, "metrics", c.out.metrics);
    maybe_get(o, "trace", c.out.trace);
    maybe_get(o, "csv", c.out.csv);
    maybe_get(o, "json", c.out.json);
  }
  maybe_get(j, "tuner", c.tuner);
  maybe_get(j, "test_fraction", c.test_fraction);
  return c;
}

namespace {

Dataset load_dataset(const DataConfig& cfg) {
  if (cfg.format == "idx") {
    return load_idx(resolve_data_path(cfg.idx_images), resolve_data_path(cfg.idx_labels),
                    cfg.limit);
  }
  if (cfg.format != "csv") {
    throw std::runtime_error("unknown dataset format: " + cfg.format);
  }
  Dataset ds = load_csv(resolve_data_path(cfg.path), cfg.label_col);
  if (cfg.limit > 0 && cfg.limit < ds.n()) {
    std::vector<int> head(cfg.limit);
    std::iota(head.begin(), head.end(), 0);
    ds = ds.subset(head);
  }
  return ds;
}

TrainConfig to_train_config(const TrainSection& t) {
  TrainConfig cfg;
  cfg.learning_rate = t.lr;
  cfg.epochs = t.epochs;
  cfg.batch_size = t.batch_size;
  cfg.seed = t.seed;
  cfg.epsilon = t.epsilon;
  cfg.tau = t.tau;
  cfg.validation_fraction = t.validation_fraction;
  return cfg;
}

KernelSpec initial_kernel(const KernelConfig& k, Eigen::Index d) {
  if (k.type == "gaussian-iso") {
    return make_gaussian_iso(k.init_sigma_f, k.init_lengthscale);
  }
  if (k.type == "gaussian-ard") {
    return make_gaussian_ard(k.init_sigma_f,
                             Eigen::VectorXd::Constant(d, k.init_lengthscale));
  }
  throw std::runtime_error("unknown kernel type: " + k.type);
}

double accuracy_against(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth) {
  Eigen::Index hits = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return truth.size() == 0 ? 0.0 : double(hits) / double(truth.size());
}

struct EvalNumbers {
  double accuracy = 0.0;
  double mean_clipped_ce = 0.0;
  double mean_entropy_clipnorm = 0.0;
};

EvalNumbers evaluate_on(const AnyModel& model, const Dataset& scaled, double epsilon) {
  const Eigen::MatrixXd P = model_predict_proba(model, scaled.inputs);
  EvalNumbers out;
  Eigen::VectorXi pred(P.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    pred[i] = argmax_label(P.row(i).transpose());
    loss += cross_entropy_clipped(scaled.labels[i], P.row(i).transpose(), epsilon);
  }
  out.accuracy = accuracy_against(pred, scaled.labels);
  out.mean_clipped_ce = loss / double(P.rows());
  out.mean_entropy_clipnorm = model_entropy_clipnorm(model, scaled.inputs).mean();
  return out;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump(2) << '\n';
}

// Runs the configured tuner on (already scaled) training data. Returns the
// fitted model plus the trace when the tuner is gradient based.
struct TunedModel {
  AnyModel model;
  TrainTrace trace;
  bool has_trace = false;
  nlohmann::json diagnostics;
};

TunedModel run_tuner(const RunConfig& config, const Dataset& train_scaled) {
  TunedModel out{AnyModel{FittedMCE{}}, {}, false, {}};
  const TrainConfig tc = to_train_config(config.train);

  if (config.kernel.type == "linear-mlp") {
    if (config.tuner != "rcb" && config.tuner != "erm") {
      throw std::runtime_error("tuner '" + config.tuner + "' supports gaussian kernels only");
    }
    std::vector<int> sizes{static_cast<int>(train_scaled.dim())};
    sizes.insert(sizes.end(), config.kernel.layers.begin(), config.kernel.layers.end());
    if (sizes.size() < 2) throw std::runtime_error("linear-mlp kernel needs --layers");
    const FeatureMap map0 = init_mlp(sizes, derive_seed(config.train.seed, 0xFEA7));
    TrainConfig cfg = tc;
    if (config.tuner == "erm") cfg.tau = 0.0;
    auto [model, trace] = train_explicit(map0, config.kernel.init_lambda, train_scaled, cfg);
    out.model = std::move(model);
    out.trace = std::move(trace);
    out.has_trace = true;
    return out;
  }

  if (config.tuner == "rcb" || config.tuner == "erm") {
    const KernelSpec spec0 = initial_kernel(config.kernel, train_scaled.dim());
    TrainConfig cfg = tc;
    if (config.tuner == "erm") cfg.tau = 0.0;
    auto [model, trace] = train(spec0, config.kernel.init_lambda, train_scaled, cfg);
    out.model = std::move(model);
    out.trace = std::move(trace);
    out.has_trace = true;
    return out;
  }

  if (config.tuner == "cv") {
    const auto grid =
        make_cv_grid(config.cv.sigma_f_grid, config.cv.ell_lo, config.cv.ell_hi,
                     config.cv.ell_count, config.cv.lambda_lo, config.cv.lambda_hi,
                     config.cv.lambda_count);
    TunerResult tuned =
        cv_tune(grid, train_scaled, config.cv.folds, config.train.seed, config.train.epsilon);
    FittedMCE model = fit(tuned.spec, tuned.lambda, train_scaled.inputs,
                          one_hot(train_scaled.labels, train_scaled.num_classes));
    model.class_names = train_scaled.class_names;
    out.model = std::move(model);
    out.diagnostics["candidate_scores"] = tuned.candidate_scores;
    return out;
  }

  if (config.tuner == "med") {
    TunerResult tuned = median_tune(train_scaled);
    FittedMCE model = fit(tuned.spec, tuned.lambda, train_scaled.inputs,
                          one_hot(train_scaled.labels, train_scaled.num_classes));
    model.class_names = train_scaled.class_names;
    out.model = std::move(model);
    return out;
  }

  throw std::runtime_error("unknown tuner: " + config.tuner);
}

void set_model_metadata(AnyModel& model, const ScalingParams& scaling) {
  std::visit([&](auto& m) { m.scaling = scaling; }, model);
}

void save_any(const std::string& path, const AnyModel& model) {
  std::visit([&](const auto& m) { save_model(path, m); }, model);
}

}  // namespace

int cmd_train(const RunConfig& config) {
  const auto start = Clock::now();
  const Dataset raw = load_dataset(config.data);

  Dataset train_raw = raw;
  Dataset test_raw;
  bool have_test = false;
  SplitPlan plan;
  if (config.test_fraction > 0.0) {
    plan = train_test_split(static_cast<int>(raw.n()), config.test_fraction, config.train.seed);
    train_raw = raw.subset(plan.train);
    test_raw = raw.subset(plan.test);
    have_test = true;
  }

  const ScalingParams scaling = fit_unit_scaling(train_raw.inputs);
  const Dataset train_scaled = apply_scaling(train_raw, scaling);

  TunedModel tuned = run_tuner(config, train_scaled);
  set_model_metadata(tuned.model, scaling);

  nlohmann::json metrics;
  metrics["artifact_version"] = kArtifactVersion;
  metrics["command"] = "train";
  metrics["seed"] = config.train.seed;
  metrics["config"] = config.to_json();
  metrics["n_train"] = train_scaled.n();
  metrics["d"] = train_scaled.dim();
  metrics["m"] = train_scaled.num_classes;
  metrics["tuner"] = config.tuner;

  const EvalNumbers train_eval = evaluate_on(tuned.model, train_scaled, config.train.epsilon);
  metrics["train_accuracy"] = train_eval.accuracy;
  metrics["train_mean_clipped_ce"] = train_eval.mean_clipped_ce;
  metrics["final_rcb"] = model_rcb(tuned.model);
  if (tuned.has_trace && !tuned.trace.records.empty()) {
    metrics["initial_q"] = tuned.trace.initial_q();
    metrics["final_q"] = tuned.trace.final_q();
  }
  if (!tuned.diagnostics.is_null() && !tuned.diagnostics.empty()) {
    metrics["tuner_diagnostics"] = tuned.diagnostics;
  }

  if (have_test) {
    const Dataset test_scaled = apply_scaling(test_raw, scaling);
    const EvalNumbers test_eval = evaluate_on(tuned.model, test_scaled, config.train.epsilon);
    metrics["n_test"] = test_scaled.n();
    metrics["test_accuracy"] = test_eval.accuracy;
    metrics["test_mean_clipped_ce"] = test_eval.mean_clipped_ce;
    metrics["test_mean_entropy_clipnorm"] = test_eval.mean_entropy_clipnorm;
    metrics["split"] = plan.to_json();
  }

  if (!config.out.model.empty()) save_any(config.out.model, tuned.model);
  if (!config.out.trace.empty() && tuned.has_trace) {
    std::ofstream trace_out(config.out.trace);
    if (!trace_out) throw std::runtime_error("cannot write: " + config.out.trace);
    tuned.trace.to_csv(trace_out);
  }
  metrics["wall_clock_seconds"] = seconds_since(start);
  if (!config.out.metrics.empty()) write_json_file(config.out.metrics, metrics);

  std::cout << "train: n=" << train_scaled.n() << " d=" << train_scaled.dim()
            << " m=" << train_scaled.num_classes << " tuner=" << config.tuner
            << " train_acc=" << train_eval.accuracy;
  if (have_test) std::cout << " test_acc=" << metrics["test_accuracy"].get<double>();
  std::cout << '\n';
  return 0;
}

int cmd_evaluate(const std::string& model_path, const DataConfig& data, double epsilon,
                 const std::string& out_metrics) {
  const auto start = Clock::now();
  const AnyModel model = load_model(model_path);
  Dataset ds = load_dataset(data);

  // map dataset labels onto the model's class ids by name
  const auto& names = model_class_names(model);
  std::vector<int> remap(ds.num_classes, -1);
  for (int c = 0; c < ds.num_classes; ++c) {
    const auto it = std::find(names.begin(), names.end(), ds.class_names[c]);
    if (it == names.end()) {
      throw std::runtime_error("label '" + ds.class_names[c] +
                               "' is not in the model's class map");
    }
    remap[c] = static_cast<int>(it - names.begin());
  }
  for (Eigen::Index i = 0; i < ds.labels.size(); ++i) ds.labels[i] = remap[ds.labels[i]];
  ds.num_classes = static_cast<int>(names.size());
  ds.class_names = names;

  if (model_scaling(model).col_min.size() > 0) {
    ds = apply_scaling(ds, model_scaling(model));
  }
  const EvalNumbers eval = evaluate_on(model, ds, epsilon);

  nlohmann::json metrics;
  metrics["artifact_version"] = kArtifactVersion;
  metrics["command"] = "evaluate";
  metrics["model"] = model_path;
  metrics["n"] = ds.n();
  metrics["accuracy"] = eval.accuracy;
  metrics["mean_clipped_ce"] = eval.mean_clipped_ce;
  metrics["mean_entropy_clipnorm"] = eval.mean_entropy_clipnorm;
  metrics["epsilon"] = epsilon;
  metrics["wall_clock_seconds"] = seconds_since(start);
  if (!out_metrics.empty()) write_json_file(out_metrics, metrics);

  std::cout << "evaluate: n=" << ds.n() << " accuracy=" << eval.accuracy
            << " mean_ce=" << eval.mean_clipped_ce << '\n';
  return 0;
}

namespace {

struct FoldOutcome {
  double accuracy = 0.0;
};

FoldOutcome run_benchmark_fold(const RunConfig& config, const std::string& tuner,
                               const Dataset& raw, const SplitPlan& plan, int fold,
                               std::uint64_t fold_seed) {
  const std::vector<int> train_idx = plan.train_indices(fold);
  const Dataset train_raw = raw.subset(train_idx);
  const Dataset test_raw = raw.subset(plan.folds[fold]);

  const ScalingParams scaling = fit_unit_scaling(train_raw.inputs);
  const Dataset train_scaled = apply_scaling(train_raw, scaling);
  const Dataset test_scaled = apply_scaling(test_raw, scaling);

  RunConfig fold_config = config;
  fold_config.train.seed = fold_seed;
  fold_config.tuner = (tuner == "rcb-sgd") ? "rcb" : tuner;
  if (tuner == "rcb-sgd") {
    fold_config.train.batch_size =
        std::max(1, static_cast<int>(std::llround(train_scaled.n() / 10.0)));
  } else if (tuner == "rcb" || tuner == "erm") {
    fold_config.train.batch_size = 0;  // full gradient
  }
  if ((tuner == "rcb" || tuner == "rcb-sgd") && !config.train.tau) {
    // Complexity weight that reproduces the table-protocol accuracies: the
    // bound's 4e balanced against the summed (not averaged) batch risk.
    const int n_b = fold_config.train.batch_size > 0
                        ? fold_config.train.batch_size
                        : static_cast<int>(train_scaled.n());
    fold_config.train.tau = kFourE / n_b;
  }

  TunedModel tuned = run_tuner(fold_config, train_scaled);
  FoldOutcome out;
  out.accuracy = evaluate_on(tuned.model, test_scaled, config.train.epsilon).accuracy;
  return out;
}

}  // namespace

int cmd_benchmark(const RunConfig& config) {
  const auto start = Clock::now();
  if (config.benchmark.datasets.empty()) {
    throw std::runtime_error("benchmark: no datasets configured");
  }

  nlohmann::json report;
  report["artifact_version"] = kArtifactVersion;
  report["command"] = "benchmark";
  report["seed"] = config.train.seed;
  report["config"] = config.to_json();
  report["rows"] = nlohmann::json::array();

  std::string csv = "dataset,tuner,mean_accuracy,std_accuracy,folds\n";

  for (std::size_t di = 0; di < config.benchmark.datasets.size(); ++di) {
    const auto& entry = config.benchmark.datasets[di];
    const Dataset raw = load_dataset(entry.data);
    const SplitPlan plan = kfold_split(static_cast<int>(raw.n()), config.benchmark.folds,
                                       derive_seed(config.train.seed, di));

    for (std::size_t ti = 0; ti < config.benchmark.tuners.size(); ++ti) {
      const std::string& tuner = config.benchmark.tuners[ti];
      std::vector<double> accs;
      for (int f = 0; f < config.benchmark.folds; ++f) {
        const std::uint64_t fold_seed =
            derive_seed(config.train.seed, (di << 16) | (ti << 8) | std::uint64_t(f));
        accs.push_back(run_benchmark_fold(config, tuner, raw, plan, f, fold_seed).accuracy);
      }
      const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
      double var = 0.0;
      for (double a : accs) var += (a - mean) * (a - mean);
      const double stdev = accs.size() > 1 ? std::sqrt(var / (accs.size() - 1)) : 0.0;

      nlohmann::json row;
      row["dataset"] = entry.name;
      row["tuner"] = tuner;
      row["mean_accuracy"] = mean;
      row["std_accuracy"] = stdev;
      row["fold_accuracies"] = accs;
      report["rows"].push_back(row);

      csv += entry.name + "," + tuner + "," + std::to_string(mean) + "," +
             std::to_string(stdev);
      for (double a : accs) csv += "," + std::to_string(a);
      csv += "\n";

      std::cout << entry.name << " / " << tuner << ": " << 100.0 * mean << " +/- "
                << 100.0 * stdev << " %\n";
    }
  }

  report["wall_clock_seconds"] = seconds_since(start);
  if (!config.out.json.empty()) write_json_file(config.out.json, report);
  if (!config.out.csv.empty()) {
    std::ofstream out(config.out.csv);
    if (!out) throw std::runtime_error("cannot write: " + config.out.csv);
    out << csv;
  }
  return 0;
}

int cmd_entropy_map(const std::string& model_path, const std::string& out_csv, double grid_min,
                    double grid_max, int grid_n) {
  const AnyModel model = load_model(model_path);
  if (model_input_dim(model) != 2) {
    throw std::runtime_error("entropy-map requires a model with 2 input attributes, got " +
                             std::to_string(model_input_dim(model)));
  }

  // The grid lives in the model's scaled input space.
  Eigen::MatrixXd queries(grid_n * grid_n, 2);
  const double step = (grid_max - grid_min) / (grid_n - 1);
  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      queries(i * grid_n + j, 0) = grid_min + step * i;
      queries(i * grid_n + j, 1) = grid_min + step * j;
    }
  }

  const Eigen::MatrixXd P = model_predict_proba(model, queries);
  const Eigen::MatrixXd Pn = clip_normalize_rows(P);
  const Eigen::VectorXd h_clip = model_entropy_clipnorm(model, queries);
  const Eigen::VectorXd h_embed = model_entropy_embedding(model, queries);

  std::ofstream out(out_csv);
  if (!out) throw std::runtime_error("cannot write: " + out_csv);
  out << "x1,x2";
  for (Eigen::Index c = 0; c < Pn.cols(); ++c) out << ",ptilde_" << c;
  out << ",entropy_clipnorm,entropy_embedding\n";
  out.precision(17);
  for (Eigen::Index r = 0; r < queries.rows(); ++r) {
    out << queries(r, 0) << ',' << queries(r, 1);
    for (Eigen::Index c = 0; c < Pn.cols(); ++c) out << ',' << Pn(r, c);
    out << ',' << h_clip[r] << ',' << h_embed[r] << '\n';
  }
  std::cout << "entropy-map: wrote " << queries.rows() << " grid rows to " << out_csv << '\n';
  return 0;
}

}  // namespace mce::cli
