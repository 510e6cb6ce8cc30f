#include "doctest.h"
#include "oracles.hpp"

#include "nll/activesub.hpp"
#include "nll/metrics.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace nll;
using nll::testing::random_mat;
using nll::testing::random_vec;

namespace {

Mat random_symmetric(std::mt19937_64& rng, int n) {
  const Mat a = random_mat(rng, n, n);
  return a + a.transpose();
}

}  // namespace

TEST_CASE("covariance of simple gradient sets") {
  Mat g(2, 2);
  g << 3, 4, 3, 4;
  Mat want(2, 2);
  want << 9, 12, 12, 16;
  CHECK(covariance(g).isApprox(want));

  CHECK(covariance(Mat::Identity(2, 2)).isApprox(0.5 * Mat::Identity(2, 2)));
  CHECK_THROWS_AS(covariance(Mat(0, 3)), ValidationError);

  std::mt19937_64 rng(1);
  const Mat c = covariance(random_mat(rng, 17, 6));
  CHECK(c == c.transpose());
}

TEST_CASE("Jacobi eigensolver on small matrices") {
  Vec d(3);
  d << 1, 5, 2;
  const SymEig e = sym_eig(Mat(d.asDiagonal()));
  CHECK(e.values.isApprox(Vec((Vec(3) << 5, 2, 1).finished())));
  CHECK(e.vectors.cwiseAbs().isApprox(
      (Mat(3, 3) << 0, 0, 1, 1, 0, 0, 0, 1, 0).finished()));

  Mat a(2, 2);
  a << 2, 1, 1, 2;
  const SymEig f = sym_eig(a);
  CHECK(f.values(0) == doctest::Approx(3.0));
  CHECK(f.values(1) == doctest::Approx(1.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(f.vectors(0, 0) - r) < 1e-14);
  CHECK(std::abs(f.vectors(1, 0) - r) < 1e-14);
  CHECK(std::abs(std::abs(f.vectors(0, 1)) - r) < 1e-14);
  CHECK(std::abs(f.vectors(0, 1) + f.vectors(1, 1)) < 1e-14);

  Mat bad = a;
  bad(0, 1) += 1e-6;
  CHECK_THROWS_AS(sym_eig(bad), ValidationError);
}

TEST_CASE("Jacobi eigensolver agrees with an independent solver") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + trial % 40;
    const Mat c = random_symmetric(rng, n);
    const SymEig e = sym_eig(c);

    const Mat recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((recon - c).norm() <= 1e-10 * c.norm());
    CHECK((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).norm() <= 1e-10);
    CHECK(std::abs(e.values.sum() - c.trace()) <= 1e-10 * std::max(1.0, c.norm()));
    for (int i = 1; i < n; ++i) CHECK(e.values(i) <= e.values(i - 1));
    for (int k = 0; k < n; ++k) {
      Eigen::Index big = 0;
      e.vectors.col(k).cwiseAbs().maxCoeff(&big);
      CHECK(e.vectors(big, k) > 0.0);
    }

    Eigen::SelfAdjointEigenSolver<Mat> oracle(c);
    const Vec want = oracle.eigenvalues().reverse();
    CHECK((e.values - want).norm() <= 1e-10 * std::max(1.0, c.norm()));
  }
}

TEST_CASE("gradient covariance is positive semidefinite") {
  std::mt19937_64 rng(3);
  const ASModel m = fit_active_subspace(random_mat(rng, 5, 12), 2);
  CHECK(m.eigvals.minCoeff() >= -1e-12);
  CHECK(m.C == m.C.transpose());
}

TEST_CASE("linear function recovers its direction") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial;
    const Vec a = random_vec(rng, n);
    Mat g(10, n);
    for (int s = 0; s < 10; ++s) g.row(s) = a.transpose();
    const ASModel m = fit_active_subspace(g, 1);
    const Vec w1 = m.W.col(0);
    // sine of the subspace angle: residual of a/|a| after projecting on w1
    const Vec unit = a.normalized();
    CHECK((unit - w1.dot(unit) * w1).norm() <= 1e-8);

    const Vec x = random_vec(rng, n);
    CHECK(std::abs(std::abs(project(m, x)(0)) - std::abs(a.dot(x)) / a.norm()) < 1e-12);
    const Vec e1 = project(m, w1);
    CHECK(std::abs(e1(0) - 1.0) < 1e-12);

    const SensitivityReport rep = coordinate_sensitivities(m, g);
    CHECK(rep.percent(0) == doctest::Approx(100.0).epsilon(1e-12));
  }
}

TEST_CASE("full projection is orthogonal") {
  std::mt19937_64 rng(5);
  const ASModel m = fit_active_subspace(random_mat(rng, 30, 7), 7);
  const Vec x = random_vec(rng, 7);
  CHECK(std::abs(project(m, x).norm() - x.norm()) <= 1e-10);
  const Vec first = project(m, m.W.col(0));
  CHECK(std::abs(first(0) - 1.0) < 1e-12);
  CHECK(first.tail(6).norm() < 1e-12);
  CHECK_THROWS_AS(fit_active_subspace(random_mat(rng, 3, 4), 5), ValidationError);
  ASModel broken = m;
  broken.k = 8;
  CHECK_THROWS_AS(project(broken, x), ValidationError);
}
