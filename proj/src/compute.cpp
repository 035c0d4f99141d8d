#include "mce/compute.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mce::compute {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() {
#ifdef _OPENMP
  return g_parallel.load();
#else
  return false;
#endif
}

void set_parallel(bool on) { g_parallel.store(on); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

// Row-major copies make the per-dimension inner loops contiguous; the
// Eigen inputs are column-major.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double row_sqdist(const RowMat& A, const RowMat& B, const Eigen::VectorXd& w,
                         Eigen::Index a, Eigen::Index b) {
  const double* pa = A.data() + a * A.cols();
  const double* pb = B.data() + b * B.cols();
  const double* pw = w.data();
  double acc = 0.0;
  const Eigen::Index d = A.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double diff = pa[j] - pb[j];
    acc += pw[j] * diff * diff;
  }
  return acc;
}

}  // namespace

void pairwise_sqdist_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::VectorXd& w, Eigen::MatrixXd& out) {
  if (A.cols() != B.cols() || w.size() != A.cols()) {
    throw std::invalid_argument("pairwise_sqdist: dimension mismatch");
  }
  const RowMat Ar = A, Br = B;
  out.resize(A.rows(), B.rows());
  for (Eigen::Index a = 0; a < Ar.rows(); ++a) {
    for (Eigen::Index b = 0; b < Br.rows(); ++b) {
      out(a, b) = row_sqdist(Ar, Br, w, a, b);
    }
  }
}

void pairwise_sqdist_omp(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::VectorXd& w, Eigen::MatrixXd& out) {
  if (A.cols() != B.cols() || w.size() != A.cols()) {
    throw std::invalid_argument("pairwise_sqdist: dimension mismatch");
  }
  const RowMat Ar = A, Br = B;
  out.resize(A.rows(), B.rows());
  const Eigen::Index na = Ar.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index a = 0; a < na; ++a) {
    for (Eigen::Index b = 0; b < Br.rows(); ++b) {
      out(a, b) = row_sqdist(Ar, Br, w, a, b);
    }
  }
}

Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& w) {
  Eigen::MatrixXd out;
  if (parallel_enabled()) {
    pairwise_sqdist_omp(A, B, w, out);
  } else {
    pairwise_sqdist_serial(A, B, w, out);
  }
  return out;
}

void exp_transform_serial(Eigen::MatrixXd& K, double sf2) {
  for (Eigen::Index c = 0; c < K.cols(); ++c) {
    K.col(c) = sf2 * (-0.5 * K.col(c).array()).exp();
  }
}

void exp_transform_omp(Eigen::MatrixXd& K, double sf2) {
  const Eigen::Index nc = K.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < nc; ++c) {
    K.col(c) = sf2 * (-0.5 * K.col(c).array()).exp();
  }
}

void exp_transform(Eigen::MatrixXd& K, double sf2) {
  if (parallel_enabled()) {
    exp_transform_omp(K, sf2);
  } else {
    exp_transform_serial(K, sf2);
  }
}

namespace {

inline void row_weighted_grad(const Eigen::MatrixXd& T, const RowMat& Ar, const RowMat& Br,
                              Eigen::Index a, double* partial) {
  const Eigen::Index d = Ar.cols();
  const double* pa = Ar.data() + a * d;
  for (Eigen::Index b = 0; b < Br.rows(); ++b) {
    const double t = T(a, b);
    if (t == 0.0) continue;
    const double* pb = Br.data() + b * d;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = pa[j] - pb[j];
      partial[j] += t * diff * diff;
    }
  }
}

Eigen::VectorXd merge_row_partials(const RowMat& partials) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(partials.cols());
  for (Eigen::Index a = 0; a < partials.rows(); ++a) {
    for (Eigen::Index j = 0; j < partials.cols(); ++j) {
      g[j] += partials(a, j);
    }
  }
  return g;
}

}  // namespace

Eigen::VectorXd weighted_sqdist_grad_serial(const Eigen::MatrixXd& T,
                                            const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& B) {
  if (T.rows() != A.rows() || T.cols() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("weighted_sqdist_grad: shape mismatch");
  }
  const RowMat Ar = A, Br = B;
  RowMat partials = RowMat::Zero(A.rows(), A.cols());
  for (Eigen::Index a = 0; a < Ar.rows(); ++a) {
    row_weighted_grad(T, Ar, Br, a, partials.data() + a * partials.cols());
  }
  return merge_row_partials(partials);
}

Eigen::VectorXd weighted_sqdist_grad_omp(const Eigen::MatrixXd& T,
                                         const Eigen::MatrixXd& A,
                                         const Eigen::MatrixXd& B) {
  if (T.rows() != A.rows() || T.cols() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("weighted_sqdist_grad: shape mismatch");
  }
  const RowMat Ar = A, Br = B;
  RowMat partials = RowMat::Zero(A.rows(), A.cols());
  const Eigen::Index na = Ar.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index a = 0; a < na; ++a) {
    row_weighted_grad(T, Ar, Br, a, partials.data() + a * partials.cols());
  }
  return merge_row_partials(partials);
}

Eigen::VectorXd weighted_sqdist_grad(const Eigen::MatrixXd& T,
                                     const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B) {
  return parallel_enabled() ? weighted_sqdist_grad_omp(T, A, B)
                            : weighted_sqdist_grad_serial(T, A, B);
}

namespace {

void check_lowrank_shapes(const Eigen::MatrixXd& C, const Eigen::MatrixXd& V,
                          const Eigen::MatrixXd& K, const Eigen::MatrixXd& A,
                          const Eigen::MatrixXd& B) {
  if (C.rows() != A.rows() || V.rows() != B.rows() || C.cols() != V.cols() ||
      K.rows() != A.rows() || K.cols() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("lowrank_weighted_sqdist_grad: shape mismatch");
  }
}

// Column-parallel: each b owns one K column and accumulates into its own
// per-dimension partial row.
inline void lowrank_column(const RowMat& Cr, const RowMat& Vr, const Eigen::MatrixXd& K,
                           const RowMat& Ar, const RowMat& Br, Eigen::Index b,
                           double* partial) {
  const Eigen::Index d = Ar.cols();
  const Eigen::Index m = Cr.cols();
  const double* pv = Vr.data() + b * m;
  const double* pb = Br.data() + b * d;
  const double* kcol = K.data() + b * K.rows();
  for (Eigen::Index a = 0; a < Ar.rows(); ++a) {
    const double* pc = Cr.data() + a * m;
    double t = 0.0;
    for (Eigen::Index c = 0; c < m; ++c) t += pc[c] * pv[c];
    t *= kcol[a];
    if (t == 0.0) continue;
    const double* pa = Ar.data() + a * d;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = pa[j] - pb[j];
      partial[j] += t * diff * diff;
    }
  }
}

}  // namespace

Eigen::VectorXd lowrank_weighted_sqdist_grad_serial(const Eigen::MatrixXd& C,
                                                    const Eigen::MatrixXd& V,
                                                    const Eigen::MatrixXd& K,
                                                    const Eigen::MatrixXd& A,
                                                    const Eigen::MatrixXd& B) {
  check_lowrank_shapes(C, V, K, A, B);
  const RowMat Cr = C, Vr = V, Ar = A, Br = B;
  RowMat partials = RowMat::Zero(B.rows(), A.cols());
  for (Eigen::Index b = 0; b < Br.rows(); ++b) {
    lowrank_column(Cr, Vr, K, Ar, Br, b, partials.data() + b * partials.cols());
  }
  return merge_row_partials(partials);
}

Eigen::VectorXd lowrank_weighted_sqdist_grad_omp(const Eigen::MatrixXd& C,
                                                 const Eigen::MatrixXd& V,
                                                 const Eigen::MatrixXd& K,
                                                 const Eigen::MatrixXd& A,
                                                 const Eigen::MatrixXd& B) {
  check_lowrank_shapes(C, V, K, A, B);
  const RowMat Cr = C, Vr = V, Ar = A, Br = B;
  RowMat partials = RowMat::Zero(B.rows(), A.cols());
  const Eigen::Index nb = Br.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < nb; ++b) {
    lowrank_column(Cr, Vr, K, Ar, Br, b, partials.data() + b * partials.cols());
  }
  return merge_row_partials(partials);
}

Eigen::VectorXd lowrank_weighted_sqdist_grad(const Eigen::MatrixXd& C,
                                             const Eigen::MatrixXd& V,
                                             const Eigen::MatrixXd& K,
                                             const Eigen::MatrixXd& A,
                                             const Eigen::MatrixXd& B) {
  return parallel_enabled() ? lowrank_weighted_sqdist_grad_omp(C, V, K, A, B)
                            : lowrank_weighted_sqdist_grad_serial(C, V, K, A, B);
}

namespace {

// One output column: sqdists of every Q row against T row t, then the
// vectorized exponential.
inline void gram_column(const RowMat& Qr, const RowMat& Tr, const Eigen::VectorXd& w,
                        double sf2, Eigen::Index t, Eigen::MatrixXd& out) {
  const Eigen::Index d = Qr.cols();
  const double* pt = Tr.data() + t * d;
  const double* pw = w.data();
  double* col = out.data() + t * out.rows();
  for (Eigen::Index q = 0; q < Qr.rows(); ++q) {
    const double* pq = Qr.data() + q * d;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = pq[j] - pt[j];
      acc += pw[j] * diff * diff;
    }
    col[q] = acc;
  }
  Eigen::Map<Eigen::VectorXd> view(col, out.rows());
  view = sf2 * (-0.5 * view.array()).exp();
}

}  // namespace

void gaussian_gram_serial(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                          const Eigen::VectorXd& w, double sf2, Eigen::MatrixXd& out) {
  if (Q.cols() != T.cols() || w.size() != Q.cols()) {
    throw std::invalid_argument("gaussian_gram: dimension mismatch");
  }
  const RowMat Qr = Q, Tr = T;
  out.resize(Q.rows(), T.rows());
  for (Eigen::Index t = 0; t < Tr.rows(); ++t) gram_column(Qr, Tr, w, sf2, t, out);
}

void gaussian_gram_omp(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                       const Eigen::VectorXd& w, double sf2, Eigen::MatrixXd& out) {
  if (Q.cols() != T.cols() || w.size() != Q.cols()) {
    throw std::invalid_argument("gaussian_gram: dimension mismatch");
  }
  const RowMat Qr = Q, Tr = T;
  out.resize(Q.rows(), T.rows());
  const Eigen::Index nt = Tr.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index t = 0; t < nt; ++t) gram_column(Qr, Tr, w, sf2, t, out);
}

Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                              const Eigen::VectorXd& w, double sf2) {
  Eigen::MatrixXd out;
  if (parallel_enabled()) {
    gaussian_gram_omp(Q, T, w, sf2, out);
  } else {
    gaussian_gram_serial(Q, T, w, sf2, out);
  }
  return out;
}

void symmetrize_from_lower(Eigen::MatrixXd& A) {
  for (Eigen::Index j = 1; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      A(i, j) = A(j, i);
    }
  }
}

namespace {

inline std::size_t pair_base(std::size_t n, std::size_t a) {
  // index of pair (a, a+1) in row-major i<j enumeration
  return a * n - a * (a + 1) / 2;
}

inline void row_distances(const RowMat& Xr, std::size_t a, double* out) {
  const Eigen::Index d = Xr.cols();
  const std::size_t n = static_cast<std::size_t>(Xr.rows());
  const double* pa = Xr.data() + a * d;
  for (std::size_t b = a + 1; b < n; ++b) {
    const double* pb = Xr.data() + b * d;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = pa[j] - pb[j];
      acc += diff * diff;
    }
    out[b - a - 1] = std::sqrt(acc);
  }
}

}  // namespace

void pairwise_distances_serial(const Eigen::MatrixXd& X, std::vector<double>& out) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const RowMat Xr = X;
  out.resize(n * (n - 1) / 2);
  for (std::size_t a = 0; a + 1 < n; ++a) {
    row_distances(Xr, a, out.data() + pair_base(n, a));
  }
}

void pairwise_distances_omp(const Eigen::MatrixXd& X, std::vector<double>& out) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  const RowMat Xr = X;
  out.resize(n * (n - 1) / 2);
  const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(n) - 1;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t a = 0; a < last; ++a) {
    row_distances(Xr, static_cast<std::size_t>(a), out.data() + pair_base(n, a));
  }
}

std::vector<double> pairwise_distances(const Eigen::MatrixXd& X) {
  std::vector<double> out;
  if (parallel_enabled()) {
    pairwise_distances_omp(X, out);
  } else {
    pairwise_distances_serial(X, out);
  }
  return out;
}

}  // namespace mce::compute
