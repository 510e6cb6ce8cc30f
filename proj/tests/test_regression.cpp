#include "doctest.h"
#include "oracles.hpp"

#include "nll/regression.hpp"

#include <cmath>

using namespace nll;
using nll::testing::random_mat;
using nll::testing::random_vec;

namespace {

// independent evaluation of a full quadratic in d variables
double quadratic(const Vec& z, double c, const Vec& lin, const Mat& q) {
  return c + lin.dot(z) + z.dot(q * z);
}

}  // namespace

TEST_CASE("monomial basis is graded") {
  const auto e = monomial_exponents(1, 2);
  REQUIRE(e.size() == 3);
  CHECK(e[0] == std::vector<int>{0});
  CHECK(e[1] == std::vector<int>{1});
  CHECK(e[2] == std::vector<int>{2});
  CHECK(monomial_exponents(2, 2).size() == 6);
  CHECK(monomial_exponents(3, 4).size() == 35);
  CHECK(monomial_exponents(2, 1)[1] == std::vector<int>{1, 0});
}

TEST_CASE("global polynomial fits its own model class exactly") {
  Mat z(7, 1);
  z << -1.5, -1.0, -0.2, 0.0, 0.4, 1.1, 2.0;
  const Vec f = z.col(0).array().square().matrix();
  RegressorConfig cfg;
  cfg.kind = RegressorKind::GlobalPoly;
  cfg.degree = 2;
  const Regressor r = Regressor::fit(cfg, z, f);
  CHECK(r.coefficients().isApprox(Vec((Vec(3) << 0, 0, 1).finished()), 1e-10));
  CHECK((r.predict_rows(z) - f).norm() <= 1e-10);
  CHECK(!r.rank_deficient());

  Mat two(2, 1);
  two << 0, 1;
  cfg.degree = 1;
  const Regressor line = Regressor::fit(cfg, two, Vec((Vec(2) << 0, 2).finished()));
  CHECK(line.predict(Vec::Constant(1, 0.5)) == doctest::Approx(1.0));
}

TEST_CASE("global polynomial reproduces quartics in two variables") {
  std::mt19937_64 rng(1);
  const Mat z = random_mat(rng, 40, 2);
  Vec f(40);
  for (int s = 0; s < 40; ++s) {
    const double a = z(s, 0), b = z(s, 1);
    f(s) = 1.0 - a + 2.0 * a * b * b * b + 0.5 * a * a * a * a - b * b;
  }
  RegressorConfig cfg;
  cfg.kind = RegressorKind::GlobalPoly;
  cfg.degree = 4;
  const Regressor r = Regressor::fit(cfg, z, f);
  CHECK((r.predict_rows(z) - f).norm() <= 1e-8 * f.norm());
}

TEST_CASE("degenerate design falls back to the minimum-norm solution") {
  const Mat z = Mat::Constant(5, 1, 0.3);
  const Vec f = Vec::Constant(5, 2.0);
  RegressorConfig cfg;
  cfg.kind = RegressorKind::GlobalPoly;
  cfg.degree = 2;
  const Regressor r = Regressor::fit(cfg, z, f);
  CHECK(r.rank_deficient());
  CHECK(r.predict(Vec::Constant(1, 0.3)) == doctest::Approx(2.0));
}

TEST_CASE("local polynomial reproduces quadratics") {
  std::mt19937_64 rng(2);
  for (int d : {1, 2, 3}) {
    const Mat z = random_mat(rng, 60, d);
    const Vec lin = random_vec(rng, d);
    const Mat q = random_mat(rng, d, d);
    Vec f(60);
    for (int s = 0; s < 60; ++s) f(s) = quadratic(z.row(s).transpose(), 0.7, lin, q);

    RegressorConfig cfg;
    cfg.degree = 2;
    cfg.neighbors = 10;
    const Regressor r = Regressor::fit(cfg, z, f);
    for (int s = 0; s < 60; s += 7) {
      CHECK(r.predict(z.row(s).transpose()) == doctest::Approx(f(s)).epsilon(1e-8));
    }
    const Vec query = random_vec(rng, d, -0.5, 0.5);
    CHECK(r.predict(query) ==
          doctest::Approx(quadratic(query, 0.7, lin, q)).epsilon(1e-8));
  }
}

TEST_CASE("local polynomial basics") {
  std::mt19937_64 rng(3);
  const Mat z = random_mat(rng, 20, 1);
  RegressorConfig cfg;
  const Regressor c = Regressor::fit(cfg, z, Vec::Constant(20, 4.25));
  CHECK(c.predict(Vec::Constant(1, 0.1)) == doctest::Approx(4.25));
  CHECK_THROWS_AS(c.predict(Vec::Zero(2)), ValidationError);

  cfg.neighbors = 5;
  cfg.degree = 2;
  Mat z2 = random_mat(rng, 20, 2);
  CHECK_THROWS_AS(Regressor::fit(cfg, z2, Vec::Zero(20)), ValidationError);
}

TEST_CASE("nearest-neighbor ties go to the lowest index") {
  // four points equidistant from the origin; degree 0 with one neighbor
  // returns the value of the lowest-index point
  Mat z(4, 2);
  z << 1, 0, 0, 1, -1, 0, 0, -1;
  Vec f(4);
  f << 10, 20, 30, 40;
  RegressorConfig cfg;
  cfg.degree = 0;
  cfg.neighbors = 1;
  const Regressor r = Regressor::fit(cfg, z, f);
  CHECK(r.predict(Vec::Zero(2)) == 10.0);
  Mat z_rev = z.colwise().reverse();
  const Regressor r2 = Regressor::fit(cfg, z_rev, f);
  CHECK(r2.predict(Vec::Zero(2)) == 10.0);
}

TEST_CASE("MLP learns a constant and a smooth curve") {
  std::mt19937_64 rng(4);
  const Mat z = random_mat(rng, 50, 1);
  RegressorConfig cfg;
  cfg.kind = RegressorKind::Mlp;
  cfg.epochs = 2000;
  const Regressor c = Regressor::fit(cfg, z, Vec::Constant(50, 3.5));
  CHECK(std::abs(c.predict(Vec::Constant(1, 0.2)) - 3.5) <= 1e-3);

  const Vec f = z.col(0).array().sin().matrix();
  const Regressor s = Regressor::fit(cfg, z, f);
  CHECK((s.predict_rows(z) - f).norm() / f.norm() < 0.02);
  const Regressor again = Regressor::fit(cfg, z, f);
  CHECK(again.predict(Vec::Constant(1, 0.3)) == s.predict(Vec::Constant(1, 0.3)));
}
