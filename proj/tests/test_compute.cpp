#include "doctest.h"
#include "mce/compute.hpp"
#include "testutil.hpp"

using namespace mce;

TEST_SUITE_BEGIN("compute");

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  Rng rng(7);
  // odd sizes exercise uneven chunking
  for (auto [na, nb, d] : {std::tuple{17, 23, 3}, std::tuple{64, 64, 7}, std::tuple{5, 1, 11}}) {
    const Eigen::MatrixXd A = testutil::random_matrix(na, d, rng, -2.0, 2.0);
    const Eigen::MatrixXd B = testutil::random_matrix(nb, d, rng, -2.0, 2.0);
    const Eigen::MatrixXd T = testutil::random_matrix(na, nb, rng, -1.0, 1.0);
    const Eigen::VectorXd w = testutil::random_matrix(d, 1, rng, 0.1, 3.0);

    Eigen::MatrixXd d_serial, d_omp;
    compute::pairwise_sqdist_serial(A, B, w, d_serial);
    compute::pairwise_sqdist_omp(A, B, w, d_omp);
    CHECK((d_serial - d_omp).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd e_serial = d_serial, e_omp = d_omp;
    compute::exp_transform_serial(e_serial, 1.3);
    compute::exp_transform_omp(e_omp, 1.3);
    CHECK((e_serial - e_omp).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::VectorXd g_serial = compute::weighted_sqdist_grad_serial(T, A, B);
    const Eigen::VectorXd g_omp = compute::weighted_sqdist_grad_omp(T, A, B);
    CHECK((g_serial - g_omp).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pairwise_sqdist matches the direct formula") {
  Rng rng(11);
  const Eigen::MatrixXd A = testutil::random_matrix(6, 4, rng);
  const Eigen::MatrixXd B = testutil::random_matrix(5, 4, rng);
  Eigen::VectorXd w(4);
  w << 1.0, 0.5, 2.0, 0.25;
  const Eigen::MatrixXd D = compute::pairwise_sqdist(A, B, w);
  for (int a = 0; a < 6; ++a) {
    for (int b = 0; b < 5; ++b) {
      double expect = 0.0;
      for (int j = 0; j < 4; ++j) {
        expect += w[j] * (A(a, j) - B(b, j)) * (A(a, j) - B(b, j));
      }
      CHECK(D(a, b) == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("weighted_sqdist_grad equals the naive triple loop") {
  Rng rng(13);
  const Eigen::MatrixXd A = testutil::random_matrix(9, 5, rng, -1.0, 1.0);
  const Eigen::MatrixXd B = testutil::random_matrix(7, 5, rng, -1.0, 1.0);
  const Eigen::MatrixXd T = testutil::random_matrix(9, 7, rng, -1.0, 1.0);
  const Eigen::VectorXd g = compute::weighted_sqdist_grad(T, A, B);
  for (int j = 0; j < 5; ++j) {
    double expect = 0.0;
    for (int a = 0; a < 9; ++a) {
      for (int b = 0; b < 7; ++b) {
        expect += T(a, b) * (A(a, j) - B(b, j)) * (A(a, j) - B(b, j));
      }
    }
    CHECK(g[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pairwise_distances enumerates i<j pairs") {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 1.0, 3.0;
  const std::vector<double> d = compute::pairwise_distances(X);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(1.0));  // (0,1)
  CHECK(d[1] == doctest::Approx(3.0));  // (0,2)
  CHECK(d[2] == doctest::Approx(2.0));  // (1,2)
}

TEST_CASE("symmetrize_from_lower mirrors the lower triangle") {
  Eigen::MatrixXd A(3, 3);
  A << 1, 9, 9, 2, 4, 9, 3, 5, 6;
  compute::symmetrize_from_lower(A);
  CHECK(A(0, 1) == 2);
  CHECK(A(0, 2) == 3);
  CHECK(A(1, 2) == 5);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_SUITE_END();
