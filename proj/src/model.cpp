#include "mce/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mce/compute.hpp"

namespace mce {

FittedMCE fit(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X,
              const Eigen::MatrixXd& Y) {
  if (!(lambda > 0.0)) throw std::invalid_argument("fit: lambda must be positive");
  if (X.rows() < 1 || X.rows() != Y.rows()) {
    throw std::invalid_argument("fit: need n >= 1 inputs matching the label rows");
  }
  FittedMCE model;
  model.kernel = spec;
  model.lambda = lambda;
  model.X = X;
  model.Y = Y;
  model.chol =
      cholesky_psd_shifted(gram(spec, X), static_cast<double>(X.rows()) * lambda);
  model.V = solve_chol(model.chol, Y);
  return model;
}

ExplicitFittedMCE fit_explicit(std::shared_ptr<const FeatureMap> map, double lambda,
                               const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (!(lambda > 0.0)) throw std::invalid_argument("fit_explicit: lambda must be positive");
  if (X.rows() < 1 || X.rows() != Y.rows()) {
    throw std::invalid_argument("fit_explicit: need n >= 1 inputs matching the label rows");
  }
  ExplicitFittedMCE model;
  model.lambda = lambda;
  model.X = X;
  model.Y = Y;
  const Eigen::MatrixXd Z = feature_forward(*map, X);
  model.map = std::move(map);
  const Eigen::Index p = Z.cols();
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);
  B.selfadjointView<Eigen::Lower>().rankUpdate(Z.transpose());
  compute::symmetrize_from_lower(B);
  model.chol = cholesky_psd_shifted(B, static_cast<double>(X.rows()) * lambda);
  model.W = solve_chol(model.chol, Z.transpose() * Y);
  return model;
}

Eigen::MatrixXd predict_proba(const FittedMCE& model, const Eigen::MatrixXd& X_query) {
  return cross_gram(model.kernel, model.X, X_query) * model.V;
}

Eigen::MatrixXd predict_proba(const ExplicitFittedMCE& model, const Eigen::MatrixXd& X_query) {
  return feature_forward(*model.map, X_query) * model.W;
}

Eigen::VectorXd clip_normalize(const Eigen::VectorXd& p) {
  Eigen::VectorXd clipped = p.cwiseMax(0.0);
  const double total = clipped.sum();
  if (total > 0.0) {
    return clipped / total;
  }
  return Eigen::VectorXd::Constant(p.size(), 1.0 / static_cast<double>(p.size()));
}

Eigen::MatrixXd clip_normalize_rows(const Eigen::MatrixXd& P) {
  Eigen::MatrixXd out(P.rows(), P.cols());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    out.row(i) = clip_normalize(P.row(i).transpose()).transpose();
  }
  return out;
}

int argmax_label(const Eigen::VectorXd& p) {
  int best = 0;
  for (Eigen::Index c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = static_cast<int>(c);
  }
  return best;
}

namespace {

Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& P) {
  Eigen::VectorXi out(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) out[i] = argmax_label(P.row(i).transpose());
  return out;
}

}  // namespace

Eigen::VectorXi predict_label(const FittedMCE& model, const Eigen::MatrixXd& X_query) {
  return argmax_rows(predict_proba(model, X_query));
}

Eigen::VectorXi predict_label(const ExplicitFittedMCE& model, const Eigen::MatrixXd& X_query) {
  return argmax_rows(predict_proba(model, X_query));
}

Eigen::VectorXd conditional_expectation(const FittedMCE& model, const Eigen::VectorXd& g,
                                        const Eigen::MatrixXd& X_query) {
  if (g.size() != model.n()) {
    throw std::invalid_argument("conditional_expectation: g must have one entry per training point");
  }
  const Eigen::MatrixXd s = solve_chol(model.chol, g);
  return cross_gram(model.kernel, model.X, X_query) * s;
}

Eigen::VectorXd conditional_expectation(const ExplicitFittedMCE& model,
                                        const Eigen::VectorXd& g,
                                        const Eigen::MatrixXd& X_query) {
  if (g.size() != model.n()) {
    throw std::invalid_argument("conditional_expectation: g must have one entry per training point");
  }
  // g^T (Z Z^T + n lambda I)^{-1} Z phi(x) = (Z^T g)^T (Z^T Z + n lambda I)^{-1} phi(x)
  const Eigen::MatrixXd Z = feature_forward(*model.map, model.X);
  const Eigen::MatrixXd s = solve_chol(model.chol, Z.transpose() * g);
  return feature_forward(*model.map, X_query) * s;
}

double rcb(const FittedMCE& model) {
  const double alpha = alpha_bound(model.kernel, model.X);
  const double t = trace_quad(model.V, gram(model.kernel, model.X));
  return alpha * std::sqrt(std::max(t, 0.0));
}

double rcb(const ExplicitFittedMCE& model) {
  const KernelSpec spec = make_linear_features(model.map);
  return alpha_bound(spec, model.X) * model.W.norm();
}

double rcb(const KernelSpec& spec, double lambda, const Eigen::MatrixXd& X_batch,
           const Eigen::MatrixXd& Y_batch) {
  return rcb(fit(spec, lambda, X_batch, Y_batch));
}

namespace {

double entropy_of_simplex(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    if (p[c] > 0.0) h -= p[c] * std::log(p[c]);
  }
  return h;
}

Eigen::VectorXd clipnorm_entropy_rows(const Eigen::MatrixXd& P) {
  Eigen::VectorXd h(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    h[i] = entropy_of_simplex(clip_normalize(P.row(i).transpose()));
  }
  return h;
}

// <mu, u> with u(c) = -log p_c where p_c > 0 else 0. Because Y^T w(x) is
// exactly the raw probability vector, the inner product over training points
// collapses to a sum over classes of p_c * u(c).
Eigen::VectorXd embedding_entropy_rows(const Eigen::MatrixXd& P) {
  Eigen::VectorXd h(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      const double p = P(i, c);
      if (p > 0.0) acc -= p * std::log(p);
    }
    h[i] = acc;
  }
  return h;
}

}  // namespace

Eigen::VectorXd entropy_clipnorm(const FittedMCE& model, const Eigen::MatrixXd& X_query) {
  return clipnorm_entropy_rows(predict_proba(model, X_query));
}

Eigen::VectorXd entropy_clipnorm(const ExplicitFittedMCE& model, const Eigen::MatrixXd& X_query) {
  return clipnorm_entropy_rows(predict_proba(model, X_query));
}

Eigen::VectorXd entropy_embedding(const FittedMCE& model, const Eigen::MatrixXd& X_query) {
  return embedding_entropy_rows(predict_proba(model, X_query));
}

Eigen::VectorXd entropy_embedding(const ExplicitFittedMCE& model,
                                  const Eigen::MatrixXd& X_query) {
  return embedding_entropy_rows(predict_proba(model, X_query));
}

}  // namespace mce
