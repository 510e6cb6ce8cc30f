// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 4 9      a subset
//
// Criteria 5-8 and 10 train full-size models and dominate the runtime.

#include "oracles.hpp"

#include "nll/driver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

using namespace nll;
using nll::testing::fd_gradient;
using nll::testing::fd_jacobian;
using nll::testing::random_mat;
using nll::testing::random_vec;
using nll::testing::rel_err;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RevNetParams random_net(std::mt19937_64& rng, int n, int layers, double scale) {
  RevNetParams p = init_params(n, layers, 0, 0.25, rng(), scale);
  Vec values = p.values();
  for (int l = 0; l < layers; ++l) {
    auto v = p.layer_of(values, l);
    v.b1 = random_vec(rng, v.b1.size(), -0.3, 0.3);
    v.b2 = random_vec(rng, v.b2.size(), -0.3, 0.3);
  }
  p.set_values(values);
  return p;
}

// ---- 1: invertibility

Verdict invertibility() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const int dims[] = {2, 8, 20, 40};
  const int depths[] = {1, 7, 15, 30};
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const int n = dims[k % 4], layers = depths[(k / 4) % 4];
    const RevNetParams p = random_net(rng, n, layers, 0.5);
    const Vec x = random_vec(rng, n, -2.0, 2.0);
    worst = std::max(worst, (inverse(p, forward(p, x)) - x).lpNorm<Eigen::Infinity>());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 10.0,
          fmt("max |h(g(x)) - x| = %.2e over 1000 cases (<= 1e-8), %.2f s (< 10 s)", worst, secs)};
}

// ---- 2: derivative oracles

Verdict derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  double vjp = 0, jac = 0, loss_new = 0, loss_hat = 0, loss_tilde = 0;
  double pf4 = 0, pf5 = 0, pr0 = 0, pk = 0;

  for (int k = 0; k < 50; ++k) {
    const int n = 2 + 2 * (k % 4);
    const RevNetParams p = random_net(rng, n, 1 + k % 5, 0.5);
    const Vec z = random_vec(rng, n), w = random_vec(rng, n);
    const Mat fd = fd_jacobian([&](const Vec& q) { return inverse(p, q); }, z, 1e-6);
    jac = std::max(jac, rel_err(inverse_jacobian(p, z), fd));
    vjp = std::max(vjp, rel_err(inverse_vjp(p, z, w), Vec(fd.transpose() * w)));
  }

  for (int k = 0; k < 50; ++k) {
    const int n = 2 + 2 * (k % 3);
    RevNetParams p = random_net(rng, n, 1 + k % 3, 0.4);
    const Batch b{random_mat(rng, 4, n), random_mat(rng, 4, n)};
    const std::pair<LossSpec, double*> specs[] = {{LossSpec::new_nll(1), &loss_new},
                                                  {LossSpec::old_hat(n, 1, 1.0), &loss_hat},
                                                  {LossSpec::old_tilde(n, 1, 1.0), &loss_tilde}};
    for (const auto& [spec, worst] : specs) {
      const Vec analytic = loss_gradient(p, b, spec).grad;
      RevNetParams q = p;
      const Vec fd = fd_gradient(
          [&](const Vec& theta) {
            q.set_values(theta);
            return loss_value(q, b, spec);
          },
          p.values());
      *worst = std::max(*worst, rel_err(analytic, fd));
    }
  }

  auto problem_err = [&](const Problem& prob, int count, double& worst) {
    const SampleSet s = sample_uniform(prob.box, count, rng(), prob.eval, prob.id);
    worst = std::max(worst, check_gradients(prob, s, 1e-6, 1e-6).max_rel_err);
  };
  problem_err(make_problem("f4"), 50, pf4);
  problem_err(make_problem("f5"), 50, pf5);
  DomainBox r0box{Vec::Constant(8, 0.05), Vec::Ones(8)};
  problem_err(make_problem("r0", r0box), 50, pr0);
  problem_err(make_problem("burgers_K"), 50, pk);

  const double secs = seconds_since(t0);
  const bool maps = vjp <= 1e-6 && jac <= 1e-6;
  const bool losses = loss_new <= 1e-4 && loss_hat <= 1e-4 && loss_tilde <= 1e-4;
  const bool probs = pf4 <= 1e-6 && pf5 <= 1e-6 && pr0 <= 1e-6 && pk <= 1e-6;
  return {maps && losses && probs && secs < 60.0,
          fmt("vjp %.1e jac %.1e | losses new %.1e hat %.1e tilde %.1e | f4 %.1e f5 %.1e "
              "R0 %.1e K %.1e | %.1f s",
              vjp, jac, loss_new, loss_hat, loss_tilde, pf4, pf5, pr0, pk, secs)};
}

// ---- 3: Burgers trivial state

Verdict burgers_trivial() {
  const auto t0 = std::chrono::steady_clock::now();
  const BurgersGrid g;
  double wdev = 0.0;
  for (double mu2 : {0.015, 0.06}) {
    const Vec mu = (Vec(3) << 1.0, mu2, 0.0).finished();
    const BurgersSolution s = burgers_solve(mu, g, 25.0);
    for (const Vec& w : s.w) wdev = std::max(wdev, (w.array() - 1.0).abs().maxCoeff());
  }
  const Vec mu = (Vec(3) << 1.0, 0.03, 0.0).finished();
  const double k25 = kinetic_energy_and_grad(mu, 25.0, g).value;
  const double secs = seconds_since(t0);
  return {wdev == 0.0 && std::abs(k25 - 1250.0) <= 1e-6 && secs < 5.0,
          fmt("max |w - 1| = %g, K(25) = %.9f, %.2f s", wdev, k25, secs)};
}

// ---- 4: Active Subspaces on a linear function

Verdict as_exact() {
  std::mt19937_64 rng(404);
  double worst_angle = 0.0, worst_sens = 100.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 19;
    const Vec a = random_vec(rng, n);
    Mat grads(10, n);
    for (int s = 0; s < 10; ++s) grads.row(s) = a.transpose();
    const ASModel m = fit_active_subspace(grads, 1);
    const Vec ahat = a.normalized();
    const Vec w1 = m.W.col(0);
    worst_angle = std::max(worst_angle, (ahat - w1.dot(ahat) * w1).norm());
    worst_sens = std::min(worst_sens, coordinate_sensitivities(m, grads).active_percent(1));
  }
  return {worst_angle <= 1e-8 && worst_sens >= 100.0 - 1e-9,
          fmt("subspace sine %.1e (<= 1e-8), first-coordinate sensitivity %.10g%%", worst_angle,
              worst_sens)};
}

// ---- shared experiment runs

struct Run {
  TableRow row;
  TrainTrace trace;
  double seconds = 0.0;
};

Run run(const ExperimentConfig& c, const Dataset& d) {
  const TrainOutcome t = train_model(c, d);
  Run r{evaluate_model(c, d, t.model).row, t.trace, t.seconds};
  std::printf("  [%s, %.0f s] %s\n", r.row.problem.c_str(), r.seconds, table_line(r.row).c_str());
  std::fflush(stdout);
  return r;
}

ExperimentConfig config(const std::string& problem, Method m, Eigen::Index n) {
  ExperimentConfig c = default_config(problem, m);
  c.n_train = n;
  return c;
}

struct Runs {
  std::map<std::string, Dataset> data;
  std::map<std::string, Run> runs;

  const Dataset& dataset(const ExperimentConfig& c) {
    const std::string key = c.problem + "/" + std::to_string(c.n_train);
    auto it = data.find(key);
    if (it == data.end()) it = data.emplace(key, generate_dataset(c)).first;
    return it->second;
  }
  const Run& get(const std::string& key, const ExperimentConfig& c) {
    auto it = runs.find(key);
    if (it == runs.end()) it = runs.emplace(key, run(c, dataset(c))).first;
    return it->second;
  }

  const Run& f5_new() { return get("f5_new", config("f5", Method::NewNll, 500)); }
  const Run& f4_new() { return get("f4_new", config("f4", Method::NewNll, 500)); }
  const Run& f4_old() { return get("f4_old", config("f4", Method::OldNllTilde, 500)); }
  const Run& f5_old() {
    ExperimentConfig c = config("f5", Method::OldNllTilde, 500);
    c.train.epochs = 2500;
    return get("f5_old", c);
  }
};

// ---- 5-7: scaled reproductions

Verdict f5_repro(Runs& r) {
  const TableRow& row = r.f5_new().row;
  return {row.sens_pct >= 80.0 && row.rrmse_pct <= 1.5,
          fmt("sens %.2f%% (>= 80), RRMSE %.3f%% (<= 1.5); paper 88.6 / 0.370", row.sens_pct,
              row.rrmse_pct)};
}

Verdict f4_repro(Runs& r) {
  const TableRow& nw = r.f4_new().row;
  const TableRow& old = r.f4_old().row;
  const bool ok = nw.sens_pct >= 80.0 && nw.rrmse_pct <= 4.0;
  const bool order = old.sens_pct < nw.sens_pct && old.rrmse_pct > nw.rrmse_pct;
  return {ok && order, fmt("New sens %.2f%% (>= 80) RRMSE %.3f%% (<= 4); Old (L~) sens %.2f%% "
                           "RRMSE %.3f%% (strictly worse: %s); paper 89.8 / 1.82",
                           nw.sens_pct, nw.rrmse_pct, old.sens_pct, old.rrmse_pct,
                           order ? "yes" : "no")};
}

Verdict burgers_repro(Runs& r) {
  const TableRow& nw = r.get("k_new", config("burgers_K", Method::NewNll, 100)).row;
  const TableRow& as = r.get("k_as", config("burgers_K", Method::ActiveSubspace, 100)).row;
  const bool ok = nw.sens_pct >= 90.0 && nw.rrmse_pct <= 1.0 && as.rrmse_pct >= 3.0 * nw.rrmse_pct;
  return {ok, fmt("New sens %.2f%% (>= 90) RRMSE %.3f%% (<= 1); AS 1-D RRMSE %.3f%% = %.1fx "
                  "(>= 3x); paper 98.3 / 0.186 vs 6.81",
                  nw.sens_pct, nw.rrmse_pct, as.rrmse_pct, as.rrmse_pct / nw.rrmse_pct)};
}

// ---- 8: training dynamics

double min_rel_until(const TrainTrace& t, int epoch) {
  double m = INFINITY;
  for (const TraceRow& row : t.rows)
    if (row.epoch <= epoch) m = std::min(m, row.train_rel_pct);
  return m;
}

Verdict dynamics(Runs& r) {
  std::string detail;
  bool ok = true;
  const std::pair<const Run*, const Run*> pairs[] = {{&r.f5_new(), &r.f5_old()},
                                                     {&r.f4_new(), &r.f4_old()}};
  for (const auto& [nw, old] : pairs) {
    const double reach = min_rel_until(nw->trace, 2500);
    const double final_new = nw->trace.rows.back().train_rel_pct;
    const double old_min = min_rel_until(old->trace, 2500);
    const bool pass = reach < 10.0 && old_min > final_new;
    ok = ok && pass;
    detail += fmt("%s: New %.3f%% by 2500 (< 10), final %.4f%%; Old min %.2f%% (> New final)  ",
                  nw->row.problem.c_str(), reach, final_new, old_min);
  }
  return {ok, detail};
}

// ---- 9: zero-loss fixed point

Verdict fixed_point() {
  std::mt19937_64 rng(909);
  const int n = 6;
  const RevNetParams p0 = init_params(n, 7, 0, 0.25, 1, 0.0);
  auto linear = [&](int count) {
    Batch b{random_mat(rng, count, n), Mat::Zero(count, n)};
    b.grads.col(0).setOnes();
    return b;
  };
  const Batch train_b = linear(50), valid_b = linear(20);
  const double loss0 = new_nll_loss(p0, train_b);
  TrainConfig cfg;
  cfg.epochs = 5000;
  cfg.log_every = 1;
  cfg.loss = LossSpec::new_nll(1);
  const TrainResult res = train(p0, train_b, valid_b, cfg);
  bool still = res.params.values() == p0.values();
  for (const TraceRow& row : res.trace.rows) still = still && row.train_loss == 0.0;
  return {loss0 == 0.0 && still,
          fmt("NewL = %g, parameters unchanged and loss 0 over %zu logged epochs: %s", loss0,
              res.trace.rows.size(), still ? "yes" : "no")};
}

// ---- 10: R0

DomainBox r0_user_box() {
  // an example of user-supplied ranges: +-50% around a nominal point
  const Vec nominal = (Vec(8) << 0.16, 0.16, 0.49, 0.5, 0.2, 0.5, 0.7, 0.2).finished();
  return {0.5 * nominal, 1.5 * nominal};
}

Verdict r0_property(Runs& r) {
  std::mt19937_64 rng(1010);
  double worst = 0.0;
  DomainBox box = r0_user_box();
  const Problem p = make_problem("r0", box);
  const SampleSet s = sample_uniform(box, 100, rng(), p.eval, p.id);
  worst = check_gradients(p, s, 1e-6, 1e-6).max_rel_err;
  const double nominal = r0_eval_grad((box.lower + box.upper) / 2).value;

  ExperimentConfig nc = config("r0", Method::NewNll, 100);
  ExperimentConfig ac = config("r0", Method::ActiveSubspace, 100);
  nc.box = ac.box = box;
  const double ns = r.get("r0_new", nc).row.sens_pct;
  const double as = r.get("r0_as", ac).row.sens_pct;
  return {worst <= 1e-6 && ns > as,
          fmt("gradient FD err %.1e; R0(center) = %.4f; New sens %.2f%% > AS 1-D %.2f%%", worst,
              nominal, ns, as)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  Runs runs;
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, invertibility},
      {2, derivatives},
      {3, burgers_trivial},
      {4, as_exact},
      {5, [&] { return f5_repro(runs); }},
      {6, [&] { return f4_repro(runs); }},
      {7, [&] { return burgers_repro(runs); }},
      {8, [&] { return dynamics(runs); }},
      {9, fixed_point},
      {10, [&] { return r0_property(runs); }},
  };
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
