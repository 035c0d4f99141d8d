#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "mce/dataset.hpp"
#include "mce/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, mce::Rng& rng,
                                     double lo = 0.0, double hi = 1.0) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = lo + (hi - lo) * rng.uniform01();
  }
  return M;
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, mce::Rng& rng) {
  const Eigen::MatrixXd B = random_matrix(n, n + 2, rng, -1.0, 1.0);
  Eigen::MatrixXd A = B * B.transpose();
  A.diagonal().array() += 0.5;
  return A;
}

inline Eigen::MatrixXd random_onehot(Eigen::Index n, int m, mce::Rng& rng) {
  Eigen::VectorXi labels(n);
  for (Eigen::Index i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.below(m));
  return mce::one_hot(labels, m);
}

// Two well-separated 2-d blobs plus a third overlapping one.
inline mce::Dataset synthetic_blobs(int n, int m, std::uint64_t seed) {
  mce::Rng rng(seed);
  mce::Dataset ds;
  ds.inputs.resize(n, 2);
  ds.labels.resize(n);
  ds.num_classes = m;
  for (int c = 0; c < m; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.below(m));
    const double angle = 2.0 * 3.14159265358979 * c / m;
    ds.inputs(i, 0) = 0.5 + 0.3 * std::cos(angle) + 0.12 * rng.normal();
    ds.inputs(i, 1) = 0.5 + 0.3 * std::sin(angle) + 0.12 * rng.normal();
    ds.labels[i] = c;
  }
  return ds;
}

// Central finite differences of a scalar function at x (component-wise).
inline Eigen::VectorXd finite_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    g[i] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

inline std::string data_dir() {
  if (const char* env = std::getenv("MCE_DATA_DIR")) return env;
  return MCE_SOURCE_DATA_DIR;
}

inline std::string data_file(const std::string& name) {
  return (std::filesystem::path(data_dir()) / name).string();
}

inline bool has_data_file(const std::string& name) {
  return std::filesystem::exists(data_file(name));
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace testutil
