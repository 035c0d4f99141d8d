#include "doctest.h"
#include "mce/features.hpp"
#include "testutil.hpp"

using namespace mce;

TEST_SUITE_BEGIN("features");

TEST_CASE("identity forward returns the input, backward has no parameters") {
  const FeatureMap map = identity_map(3);
  Rng rng(1);
  const Eigen::MatrixXd X = testutil::random_matrix(5, 3, rng);
  FeatureForward bundle;
  const Eigen::MatrixXd Z = feature_forward(map, X, &bundle);
  CHECK((Z - X).cwiseAbs().maxCoeff() == 0.0);
  CHECK(feature_backward(bundle, Eigen::MatrixXd::Ones(5, 3)).size() == 0);
  CHECK(map.param_count() == 0);
}

TEST_CASE("zero weights with bias 0.1 output 0.1 everywhere") {
  FeatureMap map = init_mlp({2, 4, 3}, 0);
  for (auto& W : map.weights) W.setZero();
  Rng rng(2);
  const Eigen::MatrixXd X = testutil::random_matrix(6, 2, rng);
  const Eigen::MatrixXd Z = feature_forward(map, X);
  CHECK(Z.rows() == 6);
  CHECK(Z.cols() == 3);
  CHECK((Z.array() - 0.1).abs().maxCoeff() < 1e-15);
}

TEST_CASE("ReLU kills negative preactivations") {
  FeatureMap map = init_mlp({2, 1}, 0);
  map.weights[0] << 1.0, -1.0;
  map.biases[0].setZero();
  Eigen::MatrixXd X(1, 2);
  X << 2.0, 3.0;
  CHECK(feature_forward(map, X)(0, 0) == 0.0);
}

TEST_CASE("positive homogeneity for single-layer zero-bias maps") {
  FeatureMap map = init_mlp({3, 5}, 4);
  for (auto& b : map.biases) b.setZero();
  Rng rng(5);
  const Eigen::MatrixXd X = testutil::random_matrix(7, 3, rng, -1.0, 1.0);
  const Eigen::MatrixXd Z1 = feature_forward(map, X);
  const Eigen::MatrixXd Z2 = feature_forward(map, Eigen::MatrixXd(2.0 * X));
  CHECK((Z2 - 2.0 * Z1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("init_mlp honors bias value, truncation, and determinism") {
  const FeatureMap a = init_mlp({4, 8, 2}, 77);
  const FeatureMap b = init_mlp({4, 8, 2}, 77);
  const FeatureMap c = init_mlp({4, 8, 2}, 78);
  for (const auto& bias : a.biases) CHECK((bias.array() == 0.1).all());
  for (const auto& W : a.weights) CHECK(W.cwiseAbs().maxCoeff() <= 0.2);
  CHECK((a.params() - b.params()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.params() - c.params()).cwiseAbs().maxCoeff() > 0.0);
  CHECK_THROWS_AS(init_mlp({3}, 0), std::invalid_argument);
}

TEST_CASE("params round-trip through the fixed flat order") {
  FeatureMap map = init_mlp({3, 4, 2}, 9);
  const Eigen::VectorXd flat = map.params();
  CHECK(flat.size() == map.param_count());
  CHECK(map.param_count() == (3 * 4 + 4) + (4 * 2 + 2));
  FeatureMap other = init_mlp({3, 4, 2}, 10);
  other.set_params(flat);
  CHECK((other.params() - flat).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(map.set_params(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("zero upstream gives a zero gradient") {
  const FeatureMap map = init_mlp({3, 5, 2}, 11);
  Rng rng(12);
  const Eigen::MatrixXd X = testutil::random_matrix(4, 3, rng);
  FeatureForward bundle;
  feature_forward(map, X, &bundle);
  const Eigen::VectorXd g = feature_backward(bundle, Eigen::MatrixXd::Zero(4, 2));
  CHECK(g.size() == map.param_count());
  CHECK(g.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    FeatureMap map = init_mlp({3, 6, 4}, 100 + trial);
    Eigen::MatrixXd X = testutil::random_matrix(4, 3, rng, -1.0, 1.0);
    Eigen::MatrixXd upstream = testutil::random_matrix(4, 4, rng, -1.0, 1.0);

    // keep probes away from ReLU kinks
    FeatureForward probe;
    feature_forward(map, X, &probe);
    bool near_kink = false;
    for (const auto& pre : probe.preacts) {
      if (pre.cwiseAbs().minCoeff() < 1e-6) near_kink = true;
    }
    if (near_kink) continue;

    const Eigen::VectorXd analytic = feature_backward(probe, upstream);
    const auto value = [&](const Eigen::VectorXd& p) {
      FeatureMap perturbed = map;
      perturbed.set_params(p);
      return (upstream.array() * feature_forward(perturbed, X).array()).sum();
    };
    const Eigen::VectorXd numeric = testutil::finite_difference(value, map.params(), 1e-5);
    const double rel = (analytic - numeric).norm() / std::max(1e-12, numeric.norm());
    CHECK(rel <= 1e-5);
  }
}

TEST_SUITE_END();
