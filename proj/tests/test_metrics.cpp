#include "doctest.h"
#include "oracles.hpp"

#include "nll/metrics.hpp"

#include <cmath>

using namespace nll;
using nll::testing::random_mat;
using nll::testing::random_vec;

TEST_CASE("identity transform sensitivities") {
  std::mt19937_64 rng(1);
  const RevNetParams id = init_params(4, 2, 0, 0.25, 1, 0.0);
  Batch b{random_mat(rng, 12, 4), Mat::Zero(12, 4)};
  b.grads.col(0).setOnes();
  const SensitivityReport r = coordinate_sensitivities(id, b);
  CHECK(r.percent == Vec((Vec(4) << 100, 0, 0, 0).finished()));
  CHECK(r.samples == 12);

  const RevNetParams id2 = init_params(2, 1, 0, 0.25, 1, 0.0);
  const Batch ones{random_mat(rng, 5, 2), Mat::Ones(5, 2)};
  const SensitivityReport half = coordinate_sensitivities(id2, ones);
  CHECK(half.percent(0) == doctest::Approx(50.0));
  CHECK(half.percent(1) == doctest::Approx(50.0));

  CHECK_THROWS_AS(coordinate_sensitivities(id2, Batch{Mat(0, 2), Mat(0, 2)}), ValidationError);
  CHECK_THROWS_AS(coordinate_sensitivities(id2, Batch{Mat::Ones(2, 2), Mat::Zero(2, 2)}),
                  ValidationError);
}

TEST_CASE("sensitivities use inverse_vjp at g(x)") {
  std::mt19937_64 rng(2);
  const RevNetParams p = init_params(6, 5, 0, 0.25, 3, 0.4);
  const Batch b{random_mat(rng, 9, 6), random_mat(rng, 9, 6)};
  const Mat pg = push_forward_gradients(p, b);
  Vec s = Vec::Zero(6), sq = Vec::Zero(6);
  for (int k = 0; k < 9; ++k) {
    const Vec z = forward(p, Vec(b.xs.row(k).transpose()));
    const Vec w = inverse_vjp(p, z, b.grads.row(k).transpose());
    CHECK((pg.row(k).transpose() - w).norm() <= 1e-12 * std::max(1.0, w.norm()));
    s += w.cwiseAbs();
    sq += w.cwiseAbs2();
  }
  const SensitivityReport r = coordinate_sensitivities(p, b);
  CHECK((r.percent - 100.0 * s / s.sum()).norm() < 1e-10);
  CHECK(std::abs(r.percent.sum() - 100.0) <= 1e-9);
  CHECK((r.percent.array() >= 0.0).all());
  const SensitivityReport q = coordinate_sensitivities(p, b, SensitivityConvention::SquaredMean);
  CHECK((q.percent - 100.0 * sq / sq.sum()).norm() < 1e-10);
}

TEST_CASE("padded networks report the inert coordinate") {
  std::mt19937_64 rng(3);
  const RevNetParams p = init_params(3, 2, 0, 0.25, 1, 0.2, true);
  const Batch b{random_mat(rng, 4, 3), random_mat(rng, 4, 3)};
  const SensitivityReport r = coordinate_sensitivities(p, b);
  CHECK(r.percent.size() == 4);
  CHECK(std::abs(r.percent.sum() - 100.0) <= 1e-9);
}

TEST_CASE("orthogonal transform of isotropic gradients is near uniform") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  Mat g(20000, 4);
  for (int s = 0; s < g.rows(); ++s) {
    for (int i = 0; i < 4; ++i) g(s, i) = normal(rng);
  }
  ASModel m;
  m.W = Eigen::HouseholderQR<Mat>(random_mat(rng, 4, 4)).householderQ();
  m.k = 1;
  const SensitivityReport r = coordinate_sensitivities(m, g);
  CHECK((r.percent.array() - 25.0).abs().maxCoeff() < 1.0);
}

TEST_CASE("error metrics") {
  const Vec t = (Vec(2) << 0, 1).finished();
  const Vec p = Vec::Zero(2);
  CHECK(rrmse(t, p) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(rl1(t, p) == 1.0);
  CHECK(rl2(t, p) == 1.0);
  CHECK(rrmse(t, t) == 0.0);
  CHECK(rl1(t, t) == 0.0);
  CHECK(rl2(t, t) == 0.0);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec f = random_vec(rng, 30);
    const Vec fh = f + 0.1 * random_vec(rng, 30);
    const double range = f.maxCoeff() - f.minCoeff();
    CHECK(std::abs(rrmse(f, fh) - rl2(f, fh) * f.norm() / (std::sqrt(30.0) * range)) <= 1e-12);
    const Vec fr = f.reverse(), fhr = fh.reverse();
    CHECK(rrmse(fr, fhr) == doctest::Approx(rrmse(f, fh)).epsilon(1e-14));
    CHECK(rl1(fr, fhr) == doctest::Approx(rl1(f, fh)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(rrmse(Vec::Ones(3), Vec::Zero(3)), ValidationError);
  CHECK_THROWS_AS(rl2(Vec::Zero(3), Vec::Ones(3)), ValidationError);
  CHECK_THROWS_AS(rl1(Vec::Ones(3), Vec::Ones(2)), ValidationError);
}
