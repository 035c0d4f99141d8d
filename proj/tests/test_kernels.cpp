#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "mce/kernels.hpp"
#include "testutil.hpp"

using namespace mce;

TEST_SUITE_BEGIN("kernels");

TEST_CASE("gaussian values from the closed form") {
  const KernelSpec spec = make_gaussian_iso(1.0, 1.0);
  Eigen::MatrixXd X(2, 2);
  X << 0.0, 0.0, 1.0, 1.0;  // squared distance 2
  const Eigen::MatrixXd K = gram(spec, X);
  CHECK(K(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(K(0, 0) == 1.0);  // diagonal exactly sigma_f^2

  const KernelSpec two = make_gaussian_iso(2.0, 0.7);
  CHECK(gram(two, X)(1, 1) == 4.0);
}

TEST_CASE("linear kernel on identity features is the dot product") {
  const KernelSpec spec = make_linear_features(std::make_shared<FeatureMap>(identity_map(2)));
  Eigen::MatrixXd Xt(1, 2), Xq(1, 2);
  Xt << 1.0, 2.0;
  Xq << 3.0, 4.0;
  CHECK(cross_gram(spec, Xt, Xq)(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("gram symmetry, bounds, and cross_gram consistency") {
  Rng rng(31);
  const Eigen::MatrixXd X = testutil::random_matrix(12, 3, rng);
  Eigen::VectorXd ells(3);
  ells << 0.4, 1.1, 2.0;
  const KernelSpec spec = make_gaussian_ard(1.5, ells);
  const Eigen::MatrixXd K = gram(spec, X);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((K.diagonal().array() == 1.5 * 1.5).all());
  CHECK(K.minCoeff() > 0.0);
  CHECK(K.maxCoeff() <= 1.5 * 1.5);
  CHECK((cross_gram(spec, X, X) - K).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random gaussian grams pass the PSD probe") {
  Rng rng(32);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd X = testutil::random_matrix(10 + trial, 2 + trial % 3, rng);
    const KernelSpec spec = make_gaussian_iso(1.0, 0.3 + 0.2 * trial);
    const Eigen::MatrixXd K = gram(spec, X);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * K.trace() / K.rows());
  }
}

TEST_CASE("grad_gram closed forms") {
  Rng rng(33);
  const Eigen::MatrixXd X = testutil::random_matrix(6, 2, rng);
  Eigen::VectorXd ells(2);
  ells << 0.5, 1.5;
  const KernelSpec spec = make_gaussian_ard(1.2, ells);
  const Eigen::MatrixXd K = gram(spec, X);

  // d K / d log sigma_f = 2 K everywhere
  CHECK((grad_gram(spec, X, 0) - 2.0 * K).cwiseAbs().maxCoeff() <= 1e-12);
  // diagonal of the lengthscale derivatives vanishes
  CHECK(grad_gram(spec, X, 1).diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(grad_gram(spec, X, 2).diagonal().cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(grad_gram(spec, X, 3), std::invalid_argument);
  CHECK_THROWS_AS(grad_gram(spec, X, -1), std::invalid_argument);
  const KernelSpec lin = make_linear_features(std::make_shared<FeatureMap>(identity_map(2)));
  CHECK_THROWS_AS(grad_gram(lin, X, 0), std::invalid_argument);
}

TEST_CASE("grad_gram matches central finite differences") {
  Rng rng(34);
  // the 5x3 instance from the operation contract, then a sweep
  for (int trial = 0; trial < 6; ++trial) {
    const int n = (trial == 0) ? 5 : 4 + static_cast<int>(rng.below(16));
    const int d = (trial == 0) ? 3 : 1 + static_cast<int>(rng.below(5));
    const Eigen::MatrixXd X = testutil::random_matrix(n, d, rng);
    Eigen::VectorXd ells(d);
    for (int j = 0; j < d; ++j) ells[j] = 0.3 + rng.uniform01();
    const bool iso = trial % 2 == 1;
    const KernelSpec spec = iso ? make_gaussian_iso(0.8 + rng.uniform01(), ells[0])
                                : make_gaussian_ard(0.8 + rng.uniform01(), ells);

    const Eigen::VectorXd params0 = spec.params();
    for (int p = 0; p < spec.param_count(); ++p) {
      const Eigen::MatrixXd analytic = grad_gram(spec, X, p);
      const double step = 1e-5;
      Eigen::VectorXd hi = params0, lo = params0;
      hi[p] += step;
      lo[p] -= step;
      const Eigen::MatrixXd numeric =
          (gram(spec.with_params(hi), X) - gram(spec.with_params(lo), X)) / (2.0 * step);
      const double rel =
          (analytic - numeric).cwiseAbs().maxCoeff() / numeric.cwiseAbs().maxCoeff();
      CHECK(rel <= (trial == 0 ? 1e-6 : 1e-5));
    }
  }
}

TEST_CASE("alpha_bound") {
  Rng rng(35);
  const Eigen::MatrixXd X = testutil::random_matrix(4, 2, rng);
  CHECK(alpha_bound(make_gaussian_iso(2.0, 1.0), X) == doctest::Approx(2.0));
  // stationary alpha ignores the batch contents
  CHECK(alpha_bound(make_gaussian_iso(2.0, 1.0), Eigen::MatrixXd::Zero(1, 2)) ==
        doctest::Approx(2.0));

  const KernelSpec lin = make_linear_features(std::make_shared<FeatureMap>(identity_map(2)));
  Eigen::MatrixXd Z(2, 2);
  Z << 3.0, 4.0, 1.0, 0.0;
  CHECK(alpha_bound(lin, Z) == doctest::Approx(5.0));
  CHECK_THROWS_AS(alpha_bound(lin, Eigen::MatrixXd(0, 2)), std::invalid_argument);
}

TEST_CASE("KernelSpec JSON round-trip") {
  Eigen::VectorXd ells(3);
  ells << 0.2, 1.0, 5.0;
  const KernelSpec ard = make_gaussian_ard(1.7, ells);
  const KernelSpec back = KernelSpec::from_json(ard.to_json());
  CHECK(back.variant == KernelVariant::gaussian_ard);
  CHECK(back.log_sigma_f == ard.log_sigma_f);
  CHECK((back.log_lengthscales - ard.log_lengthscales).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
