#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace mce::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

// One JSON document drives a run; every field is overridable by a flag of
// the same dotted name. Paths resolve against MCE_DATA_DIR when not found
// as given.
struct DataConfig {
  std::string path;
  std::string format = "csv";  // csv | idx
  std::string label_col = "last";
  std::string idx_images;  // idx format
  std::string idx_labels;
  int limit = 0;
};

struct KernelConfig {
  std::string type = "gaussian-ard";  // gaussian-iso | gaussian-ard | linear-mlp
  std::vector<int> layers;            // hidden+output widths for linear-mlp
  double init_sigma_f = 1.0;
  double init_lengthscale = 1.0;
  double init_lambda = 1.0;
};

struct TrainSection {
  double lr = 0.1;
  int epochs = 1000;
  int batch_size = 0;
  std::uint64_t seed = 0;
  double epsilon = 1e-15;
  std::optional<double> tau;
  double validation_fraction = 0.0;
};

struct CvSection {
  int folds = 5;
  std::vector<double> sigma_f_grid{1.0};
  double ell_lo = 1e-2, ell_hi = 1e1;
  int ell_count = 7;
  double lambda_lo = 1e-6, lambda_hi = 1.0;
  int lambda_count = 5;
};

struct BenchmarkDataset {
  std::string name;
  DataConfig data;
};

struct BenchmarkSection {
  std::vector<BenchmarkDataset> datasets;
  std::vector<std::string> tuners{"rcb", "rcb-sgd", "erm", "cv", "med"};
  int folds = 10;
};

struct OutSection {
  std::string model;
  std::string metrics;
  std::string trace;
  std::string csv;   // benchmark table
  std::string json;  // benchmark table
};

struct RunConfig {
  DataConfig data;
  KernelConfig kernel;
  TrainSection train;
  CvSection cv;
  BenchmarkSection benchmark;
  OutSection out;
  std::string tuner = "rcb";
  double test_fraction = 0.0;  // train command holdout

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

int cmd_train(const RunConfig& config);
int cmd_evaluate(const std::string& model_path, const DataConfig& data, double epsilon,
                 const std::string& out_metrics);
int cmd_benchmark(const RunConfig& config);
int cmd_entropy_map(const std::string& model_path, const std::string& out_csv, double grid_min,
                    double grid_max, int grid_n);

// Resolves against MCE_DATA_DIR when the path does not exist as given.
std::string resolve_data_path(const std::string& path);

}  // namespace mce::cli
