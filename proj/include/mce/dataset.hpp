#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mce/rng.hpp"

namespace mce {

// Labels are stored 0-based with a retained mapping back to the original
// label text; one-based conventions live only at I/O boundaries.
struct Dataset {
  Eigen::MatrixXd inputs;  // n x d
  Eigen::VectorXi labels;  // values in {0..num_classes-1}
  int num_classes = 0;
  std::vector<std::string> class_names;  // class id -> original label

  Eigen::Index n() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  Dataset subset(const std::vector<int>& indices) const;
};

// Header row required; label column chosen by name, or the last column when
// label_column == "last". Labels map to contiguous ids in first-appearance
// order.
Dataset load_csv(const std::string& path, const std::string& label_column = "last");

// Standard big-endian IDX containers (magic 0x803 images / 0x801 labels).
// Pixels are flattened row-major and scaled by 1/255. limit == 0 keeps all.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 int limit = 0);

Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int num_classes);

struct ScalingParams {
  Eigen::VectorXd col_min;
  Eigen::VectorXd col_max;

  nlohmann::json to_json() const;
  static ScalingParams from_json(const nlohmann::json& j);
};

// Unit-range scaling fitted per attribute; constant attributes map to 0
// everywhere. Applied to unseen data the result may leave [0, 1].
ScalingParams fit_unit_scaling(const Eigen::MatrixXd& X);
Eigen::MatrixXd apply_scaling(const Eigen::MatrixXd& X, const ScalingParams& params);
Dataset apply_scaling(const Dataset& ds, const ScalingParams& params);

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> folds;  // k-fold mode
  std::vector<int> train;               // holdout mode
  std::vector<int> test;

  bool is_kfold() const { return !folds.empty(); }
  // all indices not in fold `held_out`
  std::vector<int> train_indices(int held_out) const;

  nlohmann::json to_json() const;
  static SplitPlan from_json(const nlohmann::json& j);
};

// Fold sizes differ by at most one; no stratification. Deterministic per seed.
SplitPlan kfold_split(int n, int k, std::uint64_t seed);
SplitPlan train_test_split(int n, double test_fraction, std::uint64_t seed);

// Epochs of a seeded shuffle consumed in contiguous chunks; the last chunk of
// an epoch may be short; each epoch reshuffles.
class BatchIterator {
 public:
  BatchIterator(int n, int batch_size, std::uint64_t seed);

  const std::vector<int>& next();
  int batches_per_epoch() const { return batches_per_epoch_; }

 private:
  std::vector<int> order_;
  std::vector<int> current_;
  std::size_t pos_ = 0;
  int batch_size_;
  int batches_per_epoch_;
  Rng rng_;
};

}  // namespace mce
