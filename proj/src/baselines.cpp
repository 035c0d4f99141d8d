#include "mce/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mce/compute.hpp"
#include "mce/objective.hpp"

namespace mce {

double median_heuristic(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) {
    throw std::invalid_argument("median_heuristic: need at least two points");
  }
  std::vector<double> dists = compute::pairwise_distances(X);
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double med = dists[mid];
  if (dists.size() % 2 == 0) {
    // midpoint of the two central order statistics
    const double below = *std::max_element(dists.begin(), dists.begin() + mid);
    med = 0.5 * (below + med);
  }
  if (!(med > 0.0)) {
    throw std::runtime_error("median_heuristic: degenerate data (median distance is zero)");
  }
  return med;
}

TunerResult median_tune(const Dataset& data) {
  TunerResult result;
  result.spec = make_gaussian_iso(1.0, median_heuristic(data.inputs));
  result.lambda = kMedianDefaultLambda;
  return result;
}

TunerResult erm_tune(const KernelSpec& spec0, double lambda0, const Dataset& data,
                     const TrainConfig& config) {
  TrainConfig erm_config = config;
  erm_config.tau = 0.0;
  auto [model, trace] = train(spec0, lambda0, data, erm_config);
  TunerResult result;
  result.spec = model.kernel;
  result.lambda = model.lambda;
  result.trace = std::move(trace);
  return result;
}

std::vector<CvCandidate> make_cv_grid(const std::vector<double>& sigma_fs, double ell_lo,
                                      double ell_hi, int ell_count, double lambda_lo,
                                      double lambda_hi, int lambda_count) {
  auto log_space = [](double lo, double hi, int count) {
    std::vector<double> out;
    if (count == 1) {
      out.push_back(lo);
      return out;
    }
    const double step = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 0; i < count; ++i) out.push_back(std::exp(std::log(lo) + step * i));
    return out;
  };
  std::vector<CvCandidate> grid;
  for (double sf : sigma_fs) {
    for (double ell : log_space(ell_lo, ell_hi, ell_count)) {
      for (double lam : log_space(lambda_lo, lambda_hi, lambda_count)) {
        grid.push_back(CvCandidate{sf, ell, lam});
      }
    }
  }
  return grid;
}

TunerResult cv_tune(const std::vector<CvCandidate>& grid, const Dataset& data, int folds,
                    std::uint64_t seed, double epsilon) {
  if (grid.empty()) throw std::invalid_argument("cv_tune: empty candidate grid");
  const SplitPlan plan = kfold_split(static_cast<int>(data.n()), folds, seed);
  const Eigen::MatrixXd Y = one_hot(data.labels, data.num_classes);

  std::vector<double> scores(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const KernelSpec spec = make_gaussian_iso(grid[g].sigma_f, grid[g].lengthscale);
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
      const std::vector<int> train_idx = plan.train_indices(f);
      const std::vector<int>& held = plan.folds[f];
      Eigen::MatrixXd Xt(train_idx.size(), data.dim()), Yt(train_idx.size(), Y.cols());
      for (std::size_t i = 0; i < train_idx.size(); ++i) {
        Xt.row(i) = data.inputs.row(train_idx[i]);
        Yt.row(i) = Y.row(train_idx[i]);
      }
      Eigen::MatrixXd Xh(held.size(), data.dim());
      for (std::size_t i = 0; i < held.size(); ++i) Xh.row(i) = data.inputs.row(held[i]);

      const FittedMCE model = fit(spec, grid[g].lambda, Xt, Yt);
      const Eigen::MatrixXd P = predict_proba(model, Xh);
      double fold_loss = 0.0;
      for (std::size_t i = 0; i < held.size(); ++i) {
        fold_loss += cross_entropy_clipped(data.labels[held[i]], P.row(i).transpose(), epsilon);
      }
      total += fold_loss / static_cast<double>(held.size());
    }
    scores[g] = total / folds;
  }

  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (scores[g] < scores[best]) best = g;
  }
  TunerResult result;
  result.spec = make_gaussian_iso(grid[best].sigma_f, grid[best].lengthscale);
  result.lambda = grid[best].lambda;
  result.candidate_scores = std::move(scores);
  return result;
}

}  // namespace mce
