#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace mce {

struct CholFactor {
  Eigen::MatrixXd L;    // lower triangular, A + jitter*I = L L^T
  double jitter = 0.0;  // jitter actually applied, never silent
};

struct SingularMatrixError : std::runtime_error {
  explicit SingularMatrixError(const std::string& what, double rung)
      : std::runtime_error(what), final_rung(rung) {}
  double final_rung;
};

// Attempts the factorization with jitter 0, then with each ladder rung scaled
// by the mean diagonal of A. Throws SingularMatrixError (carrying the final
// rung) when the ladder is exhausted.
CholFactor cholesky_psd(const Eigen::MatrixXd& A,
                        const std::vector<double>& jitter_ladder = {1e-12, 1e-10, 1e-8,
                                                                    1e-6});

// Factorization of K + shift*I without materializing the shifted matrix.
CholFactor cholesky_psd_shifted(const Eigen::MatrixXd& K, double shift,
                                const std::vector<double>& jitter_ladder = {1e-12, 1e-10,
                                                                            1e-8, 1e-6});

// A^{-1} B via two triangular solves.
Eigen::MatrixXd solve_chol(const CholFactor& factor, const Eigen::MatrixXd& B);

// trace(V^T K V)
double trace_quad(const Eigen::MatrixXd& V, const Eigen::MatrixXd& K);

}  // namespace mce
