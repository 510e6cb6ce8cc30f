#include "nll/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <tuple>

namespace nll {

namespace {

using Key = std::tuple<std::string, std::string, Eigen::Index>;

const std::map<Key, Reference>& references() {
  static const std::map<Key, Reference> table = {
      {{"f4", "New NLL", 100}, {78.7, 3.86, 8.27, 10.9}},
      {{"f4", "New NLL", 500}, {89.8, 1.82, 3.52, 5.16}},
      {{"f4", "New NLL", 2500}, {94.5, 0.827, 1.72, 2.35}},
      {{"f4", "Old NLL", 100}, {60.4, 6.63, 14.5, 18.8}},
      {{"f4", "Old NLL", 500}, {65.9, 4.58, 10.5, 13.0}},
      {{"f4", "Old NLL", 2500}, {69.2, 4.02, 9.11, 11.4}},
      {{"f4", "AS 1-D", 100}, {25.8, 30.3, 75.9, 85.9}},
      {{"f4", "AS 1-D", 500}, {25.9, 21.7, 39.5, 61.4}},
      {{"f4", "AS 1-D", 2500}, {25.9, 15.9, 37.6, 44.8}},
      {{"f5", "New NLL", 100}, {75.1, 0.920, 5.79, 7.92}},
      {{"f5", "New NLL", 500}, {88.6, 0.370, 2.78, 3.97}},
      {{"f5", "New NLL", 2500}, {93.8, 0.154, 1.63, 1.98}},
      {{"f5", "Old NLL 1", 100}, {54.6, 0.699, 7.48, 9.40}},
      {{"f5", "Old NLL 1", 500}, {55.4, 0.942, 7.26, 9.52}},
      {{"f5", "Old NLL 1", 2500}, {56.1, 0.784, 6.91, 8.05}},
      {{"f5", "Old NLL 2", 100}, {61.8, 1.80, 12.9, 21.1}},
      {{"f5", "Old NLL 2", 500}, {68.7, 1.03, 9.22, 11.1}},
      {{"f5", "Old NLL 2", 2500}, {67.5, 0.894, 8.16, 9.69}},
      {{"burgers_K", "New NLL", 20}, {97.6, 0.425, 1.12, 1.27}},
      {{"burgers_K", "New NLL", 100}, {98.3, 0.186, 0.496, 0.555}},
      {{"burgers_K", "New NLL", 500}, {98.3, 0.101, 0.502, 0.540}},
      {{"burgers_K", "Old NLL", 20}, {80.1, 3.52, 9.82, 10.5}},
      {{"burgers_K", "Old NLL", 100}, {80.5, 3.19, 8.99, 9.53}},
      {{"burgers_K", "Old NLL", 500}, {80.3, 3.25, 9.15, 9.70}},
      {{"burgers_K", "AS 1-D", 20}, {64.4, 6.64, 18.8, 19.8}},
      {{"burgers_K", "AS 1-D", 100}, {65.1, 6.81, 19.6, 20.3}},
      {{"burgers_K", "AS 1-D", 500}, {65.0, 6.78, 19.4, 20.2}},
      {{"burgers_K", "AS 2-D", 20}, {87.5, 3.32, 9.54, 9.90}},
      {{"burgers_K", "AS 2-D", 100}, {88.7, 2.64, 6.96, 7.88}},
      {{"burgers_K", "AS 2-D", 500}, {88.7, 2.65, 7.06, 7.91}},
  };
  return table;
}

struct Entry {
  Method method;
  int active_dim;
};

Job make_job(const std::string& problem, Entry e, Eigen::Index samples, const PlanOptions& opt) {
  Job j;
  j.config = default_config(problem, e.method);
  ExperimentConfig& c = j.config;
  c.active_dim = e.active_dim;
  c.n_train = samples;
  c.seed = opt.seed;
  if (problem == "r0") c.box = opt.r0_box;
  if (opt.epochs) {
    c.train.epochs = *opt.epochs;
    c.train.log_every = std::max(1, std::min(c.train.log_every, *opt.epochs));
    c.regressor.epochs = *opt.epochs;
  }
  j.label = table_label(e.method, e.active_dim, problem);
  std::string tag = to_string(e.method);
  if (e.active_dim > 1 || e.method == Method::ActiveSubspace) tag += std::to_string(e.active_dim);
  c.out = opt.out + "/" + problem + "/n" + std::to_string(samples) + "/" + tag;
  return j;
}

}  // namespace

TablePlan plan_table(const std::string& id, const PlanOptions& opt) {
  TablePlan plan;
  plan.id = id;
  std::vector<std::pair<std::string, std::vector<Entry>>> grid;
  if (id == "table1") {
    plan.samples = {100, 500, 2500};
    grid = {{"f4", {{Method::NewNll, 1}, {Method::OldNllTilde, 1}, {Method::ActiveSubspace, 1}}},
            {"f5", {{Method::NewNll, 1}, {Method::OldNllTilde, 1}, {Method::OldNllTilde, 2}}}};
  } else if (id == "table2") {
    plan.samples = {20, 100, 500};
    const std::vector<Entry> rows = {{Method::NewNll, 1},
                                     {Method::OldNllHat, 1},
                                     {Method::ActiveSubspace, 1},
                                     {Method::ActiveSubspace, 2}};
    if (opt.r0_box) {
      require(opt.r0_box->dim() == 8, "r0 box must have 8 coordinates");
      grid.push_back({"r0", rows});
    } else {
      plan.notes.push_back("r0 rows skipped: no parameter ranges given (--box)");
    }
    grid.push_back({"burgers_K", rows});
  } else {
    throw ValidationError("unknown table '" + id + "' (expected table1 or table2)");
  }
  if (!opt.samples.empty()) plan.samples = opt.samples;
  for (Eigen::Index n : plan.samples) require(n >= 1, "sample counts must be positive");
  for (const auto& [problem, entries] : grid)
    for (Eigen::Index n : plan.samples)
      for (const Entry& e : entries) plan.jobs.push_back(make_job(problem, e, n, opt));
  return plan;
}

std::optional<Reference> reference_row(const std::string& problem, const std::string& label,
                                       Eigen::Index samples) {
  const auto it = references().find({problem, label, samples});
  if (it == references().end()) return std::nullopt;
  return it->second;
}

std::vector<BandCheck> check_bands(const std::vector<TableRow>& rows) {
  std::vector<BandCheck> out;
  for (const TableRow& r : rows) {
    if (r.problem == "r0") {
      if (r.method != "New NLL") continue;
      const auto as = std::find_if(rows.begin(), rows.end(), [&](const TableRow& o) {
        return o.problem == "r0" && o.samples == r.samples && o.method == "AS 1-D";
      });
      if (as == rows.end()) continue;
      out.push_back({r.problem, r.method, r.samples, "property", r.sens_pct, as->sens_pct,
                     "sens > AS 1-D sens", r.sens_pct > as->sens_pct});
      continue;
    }
    const auto ref = reference_row(r.problem, r.method, r.samples);
    if (!ref) continue;
    out.push_back({r.problem, r.method, r.samples, "sens_pct", r.sens_pct, ref->sens_pct,
                   ">= ref - 10", r.sens_pct >= ref->sens_pct - 10.0});
    out.push_back({r.problem, r.method, r.samples, "rrmse_pct", r.rrmse_pct, ref->rrmse_pct,
                   "<= 3 x ref", r.rrmse_pct <= 3.0 * ref->rrmse_pct});
  }
  return out;
}

std::string band_header() { return "problem,method,samples,metric,value,reference,band,status"; }

std::string band_line(const BandCheck& b) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%s,%s,%lld,%s,%.4g,%.4g,%s,%s", b.problem.c_str(),
                b.method.c_str(), static_cast<long long>(b.samples), b.metric.c_str(), b.value,
                b.reference, b.band.c_str(), b.pass ? "ok" : "FLAG");
  return buf;
}

GradientCheck check_gradients(const Problem& p, const SampleSet& s, double rel_step, double tol) {
  require(p.box.dim() == s.dim(), "sample dimension disagrees with the problem");
  require(rel_step > 0.0 && tol > 0.0, "step and tolerance must be positive");
  GradientCheck gc;
  gc.samples = s.size();
  const Vec h = rel_step * (p.box.upper - p.box.lower);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    // keep the stencil inside the box
    Vec x = s.x.row(k).transpose();
    x = x.cwiseMax(p.box.lower + h).cwiseMin(p.box.upper - h);
    const Vec g = p.eval(x).grad;
    Vec fd(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Vec plus = x, minus = x;
      plus(i) += h(i);
      minus(i) -= h(i);
      fd(i) = (p.eval(plus).value - p.eval(minus).value) / (2.0 * h(i));
    }
    const double scale = g.norm();
    const double err = (g - fd).norm() / (scale > 0.0 ? scale : 1.0);
    gc.rel_err.push_back(err);
    gc.max_rel_err = std::max(gc.max_rel_err, err);
    if (!(err <= tol)) ++gc.failures;
  }
  return gc;
}

}  // namespace nll
