#include "doctest.h"
#include "mce/model.hpp"
#include "testutil.hpp"

using namespace mce;

namespace {

// Four points so far apart that the gaussian gram underflows to the identity.
Eigen::MatrixXd far_points() {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 1e6, 2e6, 3e6;
  return X;
}

Eigen::MatrixXd distinct_labels(int n) {
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i;
  return one_hot(labels, n);
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("single-point fit solves (1 + 1)^{-1}") {
  const KernelSpec spec = make_gaussian_iso(1.0, 1.0);
  Eigen::MatrixXd X(1, 1);
  X << 0.3;
  Eigen::VectorXi y(1);
  y << 0;
  const FittedMCE model = fit(spec, 1.0, X, one_hot(y, 2));
  CHECK(model.V(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(model.V(0, 1) == 0.0);

  const Eigen::MatrixXd P = predict_proba(model, X);
  CHECK(P(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(P(0, 1) == 0.0);
}

TEST_CASE("identity gram gives V = Y/2 at n lambda = 1") {
  const KernelSpec spec = make_gaussian_iso(1.0, 1.0);
  const Eigen::MatrixXd Y = distinct_labels(4);
  const FittedMCE model = fit(spec, 0.25, far_points(), Y);
  CHECK((model.V - 0.5 * Y).cwiseAbs().maxCoeff() <= 1e-12);

  // at a training point the raw estimate is half its one-hot row
  const Eigen::MatrixXd P = predict_proba(model, far_points());
  CHECK((P - 0.5 * Y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fit residual stays small on random instances") {
  Rng rng(41);
  const Eigen::MatrixXd X = testutil::random_matrix(20, 3, rng);
  const Eigen::MatrixXd Y = testutil::random_onehot(20, 4, rng);
  const KernelSpec spec = make_gaussian_iso(1.0, 0.5);
  const FittedMCE model = fit(spec, 0.1, X, Y);
  Eigen::MatrixXd A = gram(spec, X);
  A.diagonal().array() += 20 * 0.1;
  CHECK((A * model.V - Y).cwiseAbs().maxCoeff() <= 1e-8 * 20);

  CHECK_THROWS_AS(fit(spec, 0.0, X, Y), std::invalid_argument);
}

TEST_CASE("interpolation limit: tiny lambda recovers one-hot training probabilities") {
  Rng rng(42);
  const Eigen::MatrixXd X = testutil::random_matrix(20, 2, rng);
  const Eigen::MatrixXd Y = testutil::random_onehot(20, 3, rng);
  const KernelSpec spec = make_gaussian_iso(1.0, 0.1);
  const FittedMCE model = fit(spec, 1e-10, X, Y);
  const Eigen::MatrixXd P = predict_proba(model, X);
  CHECK((P - Y).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("explicit path matches the implicit path") {
  // orthonormal identity features: exact agreement by the push-through identity
  auto id4 = std::make_shared<FeatureMap>(identity_map(4));
  const Eigen::MatrixXd X4 = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::MatrixXd Y4 = distinct_labels(4);
  const ExplicitFittedMCE ex = fit_explicit(id4, 0.25, X4, Y4);
  const FittedMCE im = fit(make_linear_features(id4), 0.25, X4, Y4);
  Rng rng(43);
  const Eigen::MatrixXd Q4 = testutil::random_matrix(6, 4, rng);
  CHECK((predict_proba(ex, Q4) - predict_proba(im, Q4)).cwiseAbs().maxCoeff() <= 1e-14);

  // random mlp features, n = 30, p = 5
  auto map = std::make_shared<FeatureMap>(init_mlp({3, 5}, 7));
  const Eigen::MatrixXd X = testutil::random_matrix(30, 3, rng);
  const Eigen::MatrixXd Y = testutil::random_onehot(30, 4, rng);
  const ExplicitFittedMCE ex2 = fit_explicit(map, 0.05, X, Y);
  const FittedMCE im2 = fit(make_linear_features(map), 0.05, X, Y);
  const Eigen::MatrixXd Q = testutil::random_matrix(10, 3, rng);
  CHECK((predict_proba(ex2, Q) - predict_proba(im2, Q)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(rcb(ex2) == doctest::Approx(rcb(im2)).epsilon(1e-8));

  // zero feature map: W = 0, all probabilities 0
  auto zero_map = std::make_shared<FeatureMap>(init_mlp({3, 5}, 0));
  for (auto& W : zero_map->weights) W.setZero();
  for (auto& b : zero_map->biases) b.setZero();
  const ExplicitFittedMCE zero = fit_explicit(zero_map, 0.1, X, Y);
  CHECK(zero.W.cwiseAbs().maxCoeff() == 0.0);
  CHECK(predict_proba(zero, Q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("clip_normalize") {
  Eigen::VectorXd p(3);
  p << 0.5, -0.1, 0.3;
  const Eigen::VectorXd q = clip_normalize(p);
  CHECK(q[0] == doctest::Approx(0.625));
  CHECK(q[1] == 0.0);
  CHECK(q[2] == doctest::Approx(0.375));

  Eigen::VectorXd uniform(2);
  uniform << 0.2, 0.2;
  CHECK(clip_normalize(uniform)[0] == doctest::Approx(0.5));

  Eigen::VectorXd none(2);
  none << -0.1, -0.2;
  CHECK(clip_normalize(none)[0] == doctest::Approx(0.5));
  CHECK(clip_normalize(none)[1] == doctest::Approx(0.5));
}

TEST_CASE("clip_normalize lands on the simplex and keeps the argmax") {
  Rng rng(44);
  for (int trial = 0; trial < 2000; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(6));
    Eigen::VectorXd p(m);
    for (int c = 0; c < m; ++c) p[c] = -1.0 + 2.5 * rng.uniform01();
    const Eigen::VectorXd q = clip_normalize(p);
    CHECK(q.minCoeff() >= 0.0);
    CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-12));
    if (p.maxCoeff() > 0.0) {
      CHECK(argmax_label(p) == argmax_label(q));
    }
  }
}

TEST_CASE("predict_label argmax and tie rule") {
  Eigen::VectorXd p(3);
  p << 0.2, 0.7, 0.1;
  CHECK(argmax_label(p) == 1);
  Eigen::VectorXd tie(2);
  tie << 0.4, 0.4;
  CHECK(argmax_label(tie) == 0);
}

TEST_CASE("conditional expectation specializes to decision probabilities") {
  Rng rng(45);
  const Eigen::MatrixXd X = testutil::random_matrix(12, 2, rng);
  const Eigen::MatrixXd Y = testutil::random_onehot(12, 3, rng);
  const KernelSpec spec = make_gaussian_iso(1.0, 0.4);
  const FittedMCE model = fit(spec, 0.2, X, Y);
  const Eigen::MatrixXd Q = testutil::random_matrix(5, 2, rng);
  const Eigen::MatrixXd P = predict_proba(model, Q);

  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXd vals = conditional_expectation(model, Y.col(c), Q);
    CHECK((vals - P.col(c)).cwiseAbs().maxCoeff() == 0.0);  // Eq. 3 is Eq. 2 specialized
  }
  const Eigen::VectorXd ones = conditional_expectation(model, Eigen::VectorXd::Ones(12), Q);
  CHECK((ones - P.rowwise().sum()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(conditional_expectation(model, Eigen::VectorXd::Zero(12), Q).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("rcb closed form, vanishing limit, and lambda monotonicity") {
  const KernelSpec spec = make_gaussian_iso(1.0, 1.0);
  const Eigen::MatrixXd Y = distinct_labels(4);
  CHECK(rcb(spec, 0.25, far_points(), Y) == doctest::Approx(1.0).epsilon(1e-12));

  // huge lambda sends V and r to zero
  CHECK(rcb(spec, 1e8, far_points(), Y) <= 1e-6);

  Rng rng(46);
  const Eigen::MatrixXd X = testutil::random_matrix(15, 2, rng);
  const Eigen::MatrixXd Yr = testutil::random_onehot(15, 3, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double loglam = -4.0; loglam <= 1.0; loglam += 0.5) {
    const double r = rcb(make_gaussian_iso(1.0, 0.5), std::pow(10.0, loglam), X, Yr);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("entropy of clip-normalized estimates") {
  Rng rng(47);
  const Eigen::MatrixXd X = testutil::random_matrix(10, 2, rng);
  const Eigen::MatrixXd Y = testutil::random_onehot(10, 3, rng);
  const FittedMCE model = fit(make_gaussian_iso(1.0, 0.5), 0.1, X, Y);

  // far away all kernel values vanish: clip-normalize degenerates to uniform
  Eigen::MatrixXd far(1, 2);
  far << 1e8, 1e8;
  CHECK(entropy_clipnorm(model, far)(0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  // and the embedding entropy clips to zero
  CHECK(entropy_embedding(model, far)(0) == 0.0);
}

TEST_CASE("embedding entropy single-point arithmetic") {
  const KernelSpec spec = make_gaussian_iso(1.0, 1.0);
  Eigen::MatrixXd X(1, 1);
  X << 0.0;
  Eigen::VectorXi y(1);
  y << 0;
  const FittedMCE model = fit(spec, 1.0, X, one_hot(y, 2));
  // p = 0.5 at the training point, so u = log 2 and h = 0.5 log 2
  CHECK(entropy_embedding(model, X)(0) ==
        doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("embedding entropy equals the naive training-point loop") {
  Rng rng(48);
  const Eigen::MatrixXd X = testutil::random_matrix(14, 2, rng);
  const Eigen::VectorXi labels = [&] {
    Eigen::VectorXi l(14);
    for (int i = 0; i < 14; ++i) l[i] = static_cast<int>(rng.below(3));
    return l;
  }();
  const Eigen::MatrixXd Y = one_hot(labels, 3);
  const FittedMCE model = fit(make_gaussian_iso(1.0, 0.4), 0.05, X, Y);
  const Eigen::MatrixXd Q = testutil::random_matrix(6, 2, rng);

  const Eigen::VectorXd fast = entropy_embedding(model, Q);
  for (int qi = 0; qi < 6; ++qi) {
    // naive oracle: build u at every training point, then u^T A^{-1} k(x)
    const Eigen::VectorXd p = predict_proba(model, Q.row(qi)).row(0).transpose();
    Eigen::VectorXd u(14);
    for (int i = 0; i < 14; ++i) {
      const double pc = p[labels[i]];
      u[i] = pc > 0.0 ? -std::log(pc) : 0.0;
    }
    const Eigen::VectorXd w = solve_chol(model.chol, u);
    const double naive = (cross_gram(model.kernel, model.X, Q.row(qi)) * w)(0);
    CHECK(fast[qi] == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("decision probability RMSE shrinks with sample size (logistic 1-d)") {
  // small preview of the acceptance-scale convergence probe
  auto run = [](int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) {
      const double x = -2.0 + 4.0 * rng.uniform01();
      const double p1 = 1.0 / (1.0 + std::exp(-4.0 * x));
      X(i, 0) = x;
      y[i] = rng.uniform01() < p1 ? 1 : 0;
    }
    const FittedMCE model =
        fit(make_gaussian_iso(1.0, 0.3), 1.0 / std::sqrt(double(n)), X, one_hot(y, 2));
    Eigen::MatrixXd grid(41, 1);
    double rmse = 0.0;
    for (int g = 0; g < 41; ++g) grid(g, 0) = -2.0 + 0.1 * g;
    const Eigen::MatrixXd P = predict_proba(model, grid);
    for (int g = 0; g < 41; ++g) {
      const double truth = 1.0 / (1.0 + std::exp(-4.0 * grid(g, 0)));
      rmse += (P(g, 1) - truth) * (P(g, 1) - truth);
    }
    return std::sqrt(rmse / 41.0);
  };
  CHECK(run(400, 5) < run(50, 5));
}

TEST_SUITE_END();
