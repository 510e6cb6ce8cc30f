#include "doctest.h"
#include "oracles.hpp"

#include "nll/optim.hpp"

#include <cmath>
#include <sstream>

using namespace nll;
using nll::testing::random_mat;

namespace {

Batch linear_target(std::mt19937_64& rng, int n, int count) {
  Batch b{random_mat(rng, count, n), Mat::Zero(count, n)};
  b.grads.col(0).setOnes();
  return b;
}

}  // namespace

TEST_CASE("ADAM first step moves each entry by lr against the gradient sign") {
  AdamState state(3);
  Vec p(3);
  p << 1.0, 2.0, 3.0;
  Vec g(3);
  g << 0.5, -4.0, 2.0;
  adam_step(state, p, g, 0.01);
  CHECK(p(0) == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(p(1) == doctest::Approx(2.01).epsilon(1e-9));
  CHECK(p(2) == doctest::Approx(2.99).epsilon(1e-9));
  CHECK(state.step == 1);
}

TEST_CASE("ADAM with zero gradient keeps parameters and decays moments") {
  AdamState state(2);
  Vec p = Vec::Ones(2);
  adam_step(state, p, Vec::Constant(2, 1.0), 0.1);
  const Vec after_first = p;
  const Vec m = state.m, v = state.v;
  AdamState frozen = state;
  Vec q = Vec::Ones(2);
  adam_step(frozen, q, Vec::Zero(2), 0.1);
  // the bias-corrected first moment is still nonzero, so only check moments
  CHECK(frozen.m.isApprox(0.9 * m));
  CHECK(frozen.v.isApprox(0.999 * v));

  AdamState fresh(2);
  Vec r = after_first;
  adam_step(fresh, r, Vec::Zero(2), 0.1);
  CHECK(r == after_first);
  CHECK(fresh.m.isZero());
  CHECK(fresh.v.isZero());
}

TEST_CASE("ADAM step stays within lr for constant-magnitude gradients") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coin(0, 1);
  AdamState state(16);
  Vec p = Vec::Zero(16);
  for (int t = 0; t < 200; ++t) {
    Vec g(16);
    for (int i = 0; i < 16; ++i) g(i) = coin(rng) ? 0.7 : -0.7;
    const Vec before = p;
    adam_step(state, p, g, 0.05);
    CHECK((p - before).lpNorm<Eigen::Infinity>() <= 0.05 * (1.0 + 1e-9));
  }
}

TEST_CASE("SGD step") {
  Vec p(1);
  p << 1.0;
  sgd_step(p, Vec::Constant(1, 2.0), 0.1);
  CHECK(p(0) == doctest::Approx(0.8));
  sgd_step(p, Vec::Zero(1), 0.1);
  CHECK(p(0) == doctest::Approx(0.8));

  Vec a = Vec::Ones(3), b = Vec::Ones(3);
  const Vec g = Vec::LinSpaced(3, -1.0, 1.0);
  sgd_step(a, g, 0.2);
  sgd_step(a, g, 0.2);
  sgd_step(b, g, 0.4);
  CHECK((a - b).norm() < 1e-15);
}

TEST_CASE("parameter updates bump the version") {
  RevNetParams p = init_params(2, 1, 0, 0.25, 1);
  const auto v0 = p.version();
  sgd_step(p, Vec::Zero(p.size()), 0.1);
  CHECK(p.version() > v0);
}

TEST_CASE("zero loss is a fixed point of ADAM training") {
  std::mt19937_64 rng(5);
  const RevNetParams p0 = init_params(4, 3, 0, 0.25, 1, 0.0);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.log_every = 1;
  const TrainResult r = train(p0, linear_target(rng, 4, 20), linear_target(rng, 4, 10), cfg);
  CHECK(r.params.values() == p0.values());
  for (const TraceRow& row : r.trace.rows) {
    CHECK(row.train_loss == 0.0);
    CHECK(row.valid_loss == 0.0);
    CHECK(row.train_rel_pct == 100.0);
  }
}

TEST_CASE("training decreases the loss and is deterministic") {
  std::mt19937_64 rng(7);
  const int n = 4;
  // quadratic target f = x^T A x with a random symmetric A
  Mat a = random_mat(rng, n, n);
  a = 0.5 * (a + a.transpose()).eval();
  Batch tr{random_mat(rng, 60, n), Mat()};
  tr.grads = 2.0 * tr.xs * a;
  Batch va{random_mat(rng, 20, n), Mat()};
  va.grads = 2.0 * va.xs * a;

  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.lr = 0.01;
  cfg.log_every = 5;
  const RevNetParams p0 = init_params(n, 4, 0, 0.25, 11);
  const TrainResult r1 = train(p0, tr, va, cfg);
  const TrainResult r2 = train(p0, tr, va, cfg);

  CHECK(r1.trace.rows.front().epoch == 0);
  CHECK(r1.trace.rows.front().train_rel_pct == 100.0);
  CHECK(r1.trace.rows.front().valid_rel_pct == 100.0);
  CHECK(r1.trace.rows.back().epoch == 50);
  CHECK(r1.trace.rows.size() == 11);
  CHECK(r1.trace.rows.back().train_loss < r1.trace.rows.front().train_loss);
  CHECK(r1.params.values() == r2.params.values());
  for (std::size_t i = 1; i < r1.trace.rows.size(); ++i) {
    CHECK(r1.trace.rows[i].epoch > r1.trace.rows[i - 1].epoch);
    CHECK(r1.trace.rows[i].train_loss == r2.trace.rows[i].train_loss);
  }
  CHECK(r1.trace.at_or_before(12).epoch == 10);
  CHECK(r1.best_valid_params.size() == p0.size());

  std::ostringstream csv;
  r1.trace.write_csv(csv);
  CHECK(csv.str().rfind("epoch,train_loss,valid_loss,train_rel_pct,valid_rel_pct\n0,", 0) == 0);

  TrainConfig sgd = cfg;
  sgd.optimizer = OptimizerKind::Sgd;
  sgd.lr = 0.002;
  sgd.loss = LossSpec::old_hat(n);
  const TrainResult r3 = train(p0, tr, va, sgd);
  CHECK(r3.trace.rows.back().train_loss < r3.trace.rows.front().train_loss);

  TrainConfig mini = cfg;
  mini.batch_size = 16;
  const TrainResult r4 = train(p0, tr, va, mini);
  const TrainResult r5 = train(p0, tr, va, mini);
  CHECK(r4.params.values() == r5.params.values());
  CHECK(r4.trace.rows.back().train_loss < r4.trace.rows.front().train_loss);
}

TEST_CASE("non-finite loss aborts with the trace so far") {
  std::mt19937_64 rng(9);
  Batch tr{random_mat(rng, 5, 2), random_mat(rng, 5, 2)};
  tr.grads(0, 0) = 1e200;  // squares overflow
  TrainConfig cfg;
  cfg.epochs = 3;
  try {
    train(init_params(2, 1, 0, 0.25, 1), tr, tr, cfg);
    FAIL("expected TrainingAborted");
  } catch (const TrainingAborted& e) {
    CHECK(e.trace().rows.size() == 1);
  }
}

TEST_CASE("training rejects bad configurations") {
  std::mt19937_64 rng(1);
  const Batch b{random_mat(rng, 3, 2), random_mat(rng, 3, 2)};
  const RevNetParams p = init_params(2, 1, 0, 0.25, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(p, b, b, cfg), ValidationError);
  cfg.epochs = 1;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(train(p, b, b, cfg), ValidationError);
  cfg.lr = 0.1;
  CHECK_THROWS_AS(train(p, Batch{Mat(0, 2), Mat(0, 2)}, b, cfg), ValidationError);
}
