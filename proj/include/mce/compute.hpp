#pragma once

#include <Eigen/Dense>

// Data-parallel inner loops shared by the kernel and objective code. Every
// kernel comes in a _serial and an _omp flavor with identical per-element
// arithmetic; reductions accumulate per-row partials that are summed in a
// fixed sequential order, so results are bit-identical no matter the thread
// count. The dispatching wrappers pick the OpenMP flavor when enabled.
namespace mce::compute {

bool parallel_enabled();
void set_parallel(bool on);
int max_threads();

// out(a, b) = sum_j w(j) * (A(a, j) - B(b, j))^2
void pairwise_sqdist_serial(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::VectorXd& w, Eigen::MatrixXd& out);
void pairwise_sqdist_omp(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const Eigen::VectorXd& w, Eigen::MatrixXd& out);
Eigen::MatrixXd pairwise_sqdist(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::VectorXd& w);

// In-place K(a, b) = sf2 * exp(-0.5 * K(a, b))
void exp_transform_serial(Eigen::MatrixXd& K, double sf2);
void exp_transform_omp(Eigen::MatrixXd& K, double sf2);
void exp_transform(Eigen::MatrixXd& K, double sf2);

// Fused gaussian gram: out(q, t) = sf2 * exp(-0.5 * sum_j w(j) (Q(q,j)-T(t,j))^2),
// built one output column at a time so the hot loop makes a single pass.
void gaussian_gram_serial(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                          const Eigen::VectorXd& w, double sf2, Eigen::MatrixXd& out);
void gaussian_gram_omp(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                       const Eigen::VectorXd& w, double sf2, Eigen::MatrixXd& out);
Eigen::MatrixXd gaussian_gram(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& T,
                              const Eigen::VectorXd& w, double sf2);

// g(j) = sum_{a,b} T(a, b) * (A(a, j) - B(b, j))^2
// (row partials in parallel, then one ordered sum over rows)
Eigen::VectorXd weighted_sqdist_grad_serial(const Eigen::MatrixXd& T,
                                            const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& B);
Eigen::VectorXd weighted_sqdist_grad_omp(const Eigen::MatrixXd& T,
                                         const Eigen::MatrixXd& A,
                                         const Eigen::MatrixXd& B);
Eigen::VectorXd weighted_sqdist_grad(const Eigen::MatrixXd& T,
                                     const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& B);

// g(j) = sum_{a,b} <C.row(a), V.row(b)> * K(a, b) * (A(a, j) - B(b, j))^2,
// the weighted_sqdist_grad of (C V^T) .* K without materializing either
// factor.
Eigen::VectorXd lowrank_weighted_sqdist_grad_serial(const Eigen::MatrixXd& C,
                                                    const Eigen::MatrixXd& V,
                                                    const Eigen::MatrixXd& K,
                                                    const Eigen::MatrixXd& A,
                                                    const Eigen::MatrixXd& B);
Eigen::VectorXd lowrank_weighted_sqdist_grad_omp(const Eigen::MatrixXd& C,
                                                 const Eigen::MatrixXd& V,
                                                 const Eigen::MatrixXd& K,
                                                 const Eigen::MatrixXd& A,
                                                 const Eigen::MatrixXd& B);
Eigen::VectorXd lowrank_weighted_sqdist_grad(const Eigen::MatrixXd& C,
                                             const Eigen::MatrixXd& V,
                                             const Eigen::MatrixXd& K,
                                             const Eigen::MatrixXd& A,
                                             const Eigen::MatrixXd& B);

// Copy the strictly lower triangle onto the upper one.
void symmetrize_from_lower(Eigen::MatrixXd& A);

// All pairwise Euclidean distances ||x_a - x_b||, a < b, in row-major pair
// order. Feeds the median heuristic.
void pairwise_distances_serial(const Eigen::MatrixXd& X, std::vector<double>& out);
void pairwise_distances_omp(const Eigen::MatrixXd& X, std::vector<double>& out);
std::vector<double> pairwise_distances(const Eigen::MatrixXd& X);

}  // namespace mce::compute
