#include "mce/linalg.hpp"

#include <string>

namespace mce {

namespace {

// Copies A (adding shift to the diagonal) into L and factors in place.
bool try_factor(const Eigen::MatrixXd& A, double shift, Eigen::MatrixXd& L) {
  L = A;
  if (shift != 0.0) L.diagonal().array() += shift;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(L);
  if (llt.info() != Eigen::Success) return false;
  L.triangularView<Eigen::StrictlyUpper>().setZero();
  return true;
}

CholFactor factor_with_ladder(const Eigen::MatrixXd& A, double shift,
                              const std::vector<double>& jitter_ladder) {
  if (A.rows() != A.cols()) {
    throw std::invalid_argument("cholesky_psd: matrix must be square");
  }
  const double scale = A.diagonal().mean() + shift;

  CholFactor factor;
  if (try_factor(A, shift, factor.L)) {
    factor.jitter = 0.0;
    return factor;
  }
  double rung = 0.0;
  for (double mult : jitter_ladder) {
    rung = mult * scale;
    if (rung > 0.0 && try_factor(A, shift + rung, factor.L)) {
      factor.jitter = rung;
      return factor;
    }
  }
  throw SingularMatrixError(
      "cholesky_psd: factorization failed after jitter ladder (final rung " +
          std::to_string(rung) + ")",
      rung);
}

}  // namespace

CholFactor cholesky_psd(const Eigen::MatrixXd& A, const std::vector<double>& jitter_ladder) {
  return factor_with_ladder(A, 0.0, jitter_ladder);
}

CholFactor cholesky_psd_shifted(const Eigen::MatrixXd& K, double shift,
                                const std::vector<double>& jitter_ladder) {
  return factor_with_ladder(K, shift, jitter_ladder);
}

Eigen::MatrixXd solve_chol(const CholFactor& factor, const Eigen::MatrixXd& B) {
  if (factor.L.rows() != B.rows()) {
    throw std::invalid_argument("solve_chol: shape mismatch");
  }
  Eigen::MatrixXd Y = factor.L.triangularView<Eigen::Lower>().solve(B);
  return factor.L.transpose().triangularView<Eigen::Upper>().solve(Y);
}

double trace_quad(const Eigen::MatrixXd& V, const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols() || V.rows() != K.rows()) {
    throw std::invalid_argument("trace_quad: shape mismatch");
  }
  return (V.array() * (K * V).array()).sum();
}

}  // namespace mce
