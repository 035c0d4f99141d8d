#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mce/dataset.hpp"
#include "mce/kernels.hpp"
#include "mce/optimize.hpp"

namespace mce {

// Median of the pairwise Euclidean distances over the strict upper triangle
// (self-distances excluded); the midpoint average for even counts. Degenerate
// inputs (all points identical) are an error.
double median_heuristic(const Eigen::MatrixXd& X);

struct TunerResult {
  KernelSpec spec;
  double lambda = 0.0;
  TrainTrace trace;                    // gradient tuners
  std::vector<double> candidate_scores;  // cv
};

// The median heuristic sets only the lengthscale; sigma_f and lambda come
// from fixed defaults since the heuristic carries no information about them.
inline constexpr double kMedianDefaultLambda = 1e-2;
TunerResult median_tune(const Dataset& data);

// Empirical risk minimization: the RCB-ablated gradient tuner (tau = 0).
TunerResult erm_tune(const KernelSpec& spec0, double lambda0, const Dataset& data,
                     const TrainConfig& config);

struct CvCandidate {
  double sigma_f = 1.0;
  double lengthscale = 1.0;
  double lambda = 1e-2;
};

// Log-spaced grid helper for the benchmark config.
std::vector<CvCandidate> make_cv_grid(const std::vector<double>& sigma_fs,
                                      double ell_lo, double ell_hi, int ell_count,
                                      double lambda_lo, double lambda_hi, int lambda_count);

// Per candidate: mean across folds of the held-out mean clipped cross
// entropy of a model fitted on the remaining folds; picks the minimizer,
// ties resolving to the first grid entry.
TunerResult cv_tune(const std::vector<CvCandidate>& grid, const Dataset& data, int folds,
                    std::uint64_t seed, double epsilon = 1e-15);

}  // namespace mce
