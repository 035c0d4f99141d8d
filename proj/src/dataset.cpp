#include "mce/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace mce {

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.inputs.resize(indices.size(), inputs.cols());
  out.labels.resize(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.inputs.row(i) = inputs.row(indices[i]);
    out.labels[i] = labels[indices[i]];
  }
  out.num_classes = num_classes;
  out.class_names = class_names;
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  for (auto& cell : cells) {
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    cell = (first == std::string::npos) ? std::string() : cell.substr(first, last - first + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t row,
                    std::size_t col) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (cell.empty() || end != begin + cell.size()) {
    throw std::runtime_error(path + ": non-numeric value '" + cell + "' at data row " +
                             std::to_string(row) + ", column " + std::to_string(col));
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open CSV file: " + path);
  }

  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error(path + ": empty file (header row required)");
  }
  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t ncols = header.size();
  if (ncols < 2) {
    throw std::runtime_error(path + ": need at least one feature column and a label column");
  }

  std::size_t label_idx = ncols - 1;
  if (label_column != "last") {
    const auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) {
      throw std::runtime_error(path + ": label column '" + label_column + "' not found");
    }
    label_idx = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> label_ids;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, int> label_map;

  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != ncols) {
      throw std::runtime_error(path + ": row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(ncols));
    }
    std::vector<double> features;
    features.reserve(ncols - 1);
    for (std::size_t c = 0; c < ncols; ++c) {
      if (c == label_idx) continue;
      features.push_back(parse_number(cells[c], path, row_no, c + 1));
    }
    const std::string& label = cells[label_idx];
    auto [it, inserted] = label_map.try_emplace(label, static_cast<int>(class_names.size()));
    if (inserted) class_names.push_back(label);
    label_ids.push_back(it->second);
    rows.push_back(std::move(features));
  }

  if (rows.empty()) {
    throw std::runtime_error(path + ": no data rows");
  }

  Dataset ds;
  ds.inputs.resize(rows.size(), ncols - 1);
  ds.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ncols; ++j) ds.inputs(i, j) = rows[i][j];
    ds.labels[i] = label_ids[i];
  }
  ds.num_classes = static_cast<int>(class_names.size());
  ds.class_names = std::move(class_names);
  return ds;
}

namespace {

std::uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(path + ": truncated IDX header");
  }
  return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
         (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, int limit) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open IDX image file: " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("cannot open IDX label file: " + labels_path);

  const std::uint32_t img_magic = read_be_u32(img, images_path);
  if (img_magic != 0x00000803u) {
    throw std::runtime_error(images_path + ": bad IDX image magic " + std::to_string(img_magic));
  }
  const std::uint32_t n_images = read_be_u32(img, images_path);
  const std::uint32_t rows = read_be_u32(img, images_path);
  const std::uint32_t cols = read_be_u32(img, images_path);

  const std::uint32_t lab_magic = read_be_u32(lab, labels_path);
  if (lab_magic != 0x00000801u) {
    throw std::runtime_error(labels_path + ": bad IDX label magic " + std::to_string(lab_magic));
  }
  const std::uint32_t n_labels = read_be_u32(lab, labels_path);
  if (n_labels != n_images) {
    throw std::runtime_error("IDX image/label count mismatch: " + std::to_string(n_images) +
                             " images vs " + std::to_string(n_labels) + " labels");
  }

  std::uint32_t n = n_images;
  if (limit > 0 && static_cast<std::uint32_t>(limit) < n) n = static_cast<std::uint32_t>(limit);
  const std::size_t d = std::size_t(rows) * cols;

  std::vector<unsigned char> pixel_buf(d);
  Dataset ds;
  ds.inputs.resize(n, d);
  ds.labels.resize(n);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!img.read(reinterpret_cast<char*>(pixel_buf.data()), pixel_buf.size())) {
      throw std::runtime_error(images_path + ": truncated image payload at item " +
                               std::to_string(i));
    }
    for (std::size_t j = 0; j < d; ++j) ds.inputs(i, j) = pixel_buf[j] / 255.0;
    unsigned char y = 0;
    if (!lab.read(reinterpret_cast<char*>(&y), 1)) {
      throw std::runtime_error(labels_path + ": truncated label payload at item " +
                               std::to_string(i));
    }
    ds.labels[i] = y;
    max_label = std::max(max_label, int(y));
  }
  ds.num_classes = max_label + 1;
  ds.class_names.resize(ds.num_classes);
  for (int c = 0; c < ds.num_classes; ++c) ds.class_names[c] = std::to_string(c);
  return ds;
}

Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int num_classes) {
  Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(labels.size(), num_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("one_hot: label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(num_classes) +
                                  " classes");
    }
    Y(i, labels[i]) = 1.0;
  }
  return Y;
}

nlohmann::json ScalingParams::to_json() const {
  return {{"min", std::vector<double>(col_min.data(), col_min.data() + col_min.size())},
          {"max", std::vector<double>(col_max.data(), col_max.data() + col_max.size())}};
}

ScalingParams ScalingParams::from_json(const nlohmann::json& j) {
  ScalingParams p;
  const auto mins = j.at("min").get<std::vector<double>>();
  const auto maxs = j.at("max").get<std::vector<double>>();
  p.col_min = Eigen::Map<const Eigen::VectorXd>(mins.data(), mins.size());
  p.col_max = Eigen::Map<const Eigen::VectorXd>(maxs.data(), maxs.size());
  return p;
}

ScalingParams fit_unit_scaling(const Eigen::MatrixXd& X) {
  ScalingParams p;
  p.col_min = X.colwise().minCoeff();
  p.col_max = X.colwise().maxCoeff();
  return p;
}

Eigen::MatrixXd apply_scaling(const Eigen::MatrixXd& X, const ScalingParams& params) {
  if (X.cols() != params.col_min.size()) {
    throw std::invalid_argument("apply_scaling: data has " + std::to_string(X.cols()) +
                                " attributes, params have " +
                                std::to_string(params.col_min.size()));
  }
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double range = params.col_max[j] - params.col_min[j];
    if (range > 0.0) {
      out.col(j) = (X.col(j).array() - params.col_min[j]) / range;
    } else {
      out.col(j).setZero();  // constant attribute carries no information
    }
  }
  return out;
}

Dataset apply_scaling(const Dataset& ds, const ScalingParams& params) {
  Dataset out = ds;
  out.inputs = apply_scaling(ds.inputs, params);
  return out;
}

std::vector<int> SplitPlan::train_indices(int held_out) const {
  std::vector<int> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (static_cast<int>(f) == held_out) continue;
    out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  return out;
}

nlohmann::json SplitPlan::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  if (is_kfold()) {
    j["kind"] = "kfold";
    j["folds"] = folds;
  } else {
    j["kind"] = "holdout";
    j["train"] = train;
    j["test"] = test;
  }
  return j;
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
  SplitPlan p;
  p.seed = j.at("seed").get<std::uint64_t>();
  if (j.at("kind") == "kfold") {
    p.folds = j.at("folds").get<std::vector<std::vector<int>>>();
  } else {
    p.train = j.at("train").get<std::vector<int>>();
    p.test = j.at("test").get<std::vector<int>>();
  }
  return p;
}

namespace {

std::vector<int> shuffled_indices(int n, Rng& rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  return idx;
}

}  // namespace

SplitPlan kfold_split(int n, int k, std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw std::invalid_argument("kfold_split: need 2 <= k <= n, got k=" + std::to_string(k) +
                                ", n=" + std::to_string(n));
  }
  Rng rng(seed);
  const std::vector<int> idx = shuffled_indices(n, rng);
  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  const int base = n / k;
  const int extra = n % k;  // first `extra` folds get one more
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int len = base + (f < extra ? 1 : 0);
    plan.folds[f].assign(idx.begin() + pos, idx.begin() + pos + len);
    pos += len;
  }
  return plan;
}

SplitPlan train_test_split(int n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: test_fraction must be in (0, 1)");
  }
  Rng rng(seed);
  const std::vector<int> idx = shuffled_indices(n, rng);
  int n_test = static_cast<int>(std::llround(test_fraction * n));
  n_test = std::max(1, std::min(n - 1, n_test));
  SplitPlan plan;
  plan.seed = seed;
  plan.test.assign(idx.begin(), idx.begin() + n_test);
  plan.train.assign(idx.begin() + n_test, idx.end());
  return plan;
}

BatchIterator::BatchIterator(int n, int batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (n < 1 || batch_size < 1 || batch_size > n) {
    throw std::invalid_argument("BatchIterator: need 1 <= batch_size <= n");
  }
  order_.resize(n);
  for (int i = 0; i < n; ++i) order_[i] = i;
  rng_.shuffle(order_);
  batches_per_epoch_ = (n + batch_size - 1) / batch_size;
}

const std::vector<int>& BatchIterator::next() {
  if (pos_ >= order_.size()) {
    rng_.shuffle(order_);
    pos_ = 0;
  }
  const std::size_t len = std::min<std::size_t>(batch_size_, order_.size() - pos_);
  current_.assign(order_.begin() + pos_, order_.begin() + pos_ + len);
  pos_ += len;
  return current_;
}

}  // namespace mce
