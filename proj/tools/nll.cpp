// nll: generate data, train a transform, evaluate it, or rerun a whole table.
//
// Everything a command writes goes under --out (or the config's "out"):
//   data/{train,valid,test}.csv, data/dataset.json
//   config.json, model.json, best_valid_model.json, trace.csv
//   metrics.csv, scatter.csv, regressor.json
//   run.log (the only file with timestamps)
//
// Exit codes: 0 ok, 1 invalid input, 2 numerical failure.

#include "nll/driver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>

namespace fs = std::filesystem;
using namespace nll;

namespace {

struct Common {
  std::string config_path;
  std::string problem;
  std::string method;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<Eigen::Index> samples;
  std::optional<int> epochs;
  std::optional<int> active_dim;
  std::string box_path;
};

void add_common(CLI::App* cmd, Common& o) {
  cmd->add_option("--config", o.config_path, "experiment JSON")->check(CLI::ExistingFile);
  cmd->add_option("--problem", o.problem, "f4 | f5 | r0 | burgers_K | csv");
  cmd->add_option("--method", o.method, "new_nll | old_nll_hat | old_nll_tilde | as");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--samples", o.samples, "training samples");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--active-dim", o.active_dim, "number of active coordinates");
  cmd->add_option("--box", o.box_path, "JSON {lower, upper} parameter ranges")
      ->check(CLI::ExistingFile);
}

fs::path data_dir_of(const ExperimentConfig& c, const std::string& flag) {
  return flag.empty() ? fs::path(c.out) / "data" : fs::path(flag);
}

// `data`, when given, supplies the box of an existing dataset (r0 needs one).
ExperimentConfig resolve(const Common& o, const std::string* data = nullptr) {
  Json j = Json::object();
  if (!o.config_path.empty()) j = read_json_file(o.config_path);
  require(j.is_object(), "experiment config must be a JSON object");
  std::string problem = o.problem.empty() ? j.value("problem", std::string("f5")) : o.problem;
  std::string method = o.method.empty() ? j.value("method", std::string("new_nll")) : o.method;
  ExperimentConfig c = config_from_json(j, default_config(problem, method_from_string(method)));
  c.problem = problem;
  c.method = method_from_string(method);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out = o.out;
  if (o.samples) c.n_train = *o.samples;
  if (o.epochs) {
    c.train.epochs = *o.epochs;
    c.train.log_every = std::max(1, std::min(c.train.log_every, *o.epochs));
  }
  if (o.active_dim) c.active_dim = *o.active_dim;
  if (!o.box_path.empty()) c.box = box_from_json(read_json_file(o.box_path));
  if (data && !c.box) {
    const fs::path meta = data_dir_of(c, *data) / "dataset.json";
    if (fs::exists(meta)) c.box = box_from_json(read_json_file(meta.string()).at("box"));
  }
  c.validate();
  return c;
}

class RunLog {
 public:
  explicit RunLog(const fs::path& dir) {
    fs::create_directories(dir);
    out_.open(dir / "run.log", std::ios::app);
  }
  template <typename... A>
  void operator()(const A&... parts) {
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
    out_ << stamp << ' ';
    (out_ << ... << parts);
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

void write_trace(const TrainTrace& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  t.write_csv(out);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "dataset.json")) {
    throw ValidationError("no dataset in '" + dir.string() + "' (run generate first)");
  }
  return read_dataset(dir);
}

void print_row(const TraceRow& r) {
  std::printf("epoch %6d  train %.6g (%.3f%%)  valid %.6g (%.3f%%)\n", r.epoch, r.train_loss,
              r.train_rel_pct, r.valid_loss, r.valid_rel_pct);
  std::fflush(stdout);
}

// Trains and writes model.json, best_valid_model.json and trace.csv.
TrainOutcome train_and_save(const ExperimentConfig& c, const Dataset& d, RunLog& log,
                            bool verbose) {
  const fs::path out(c.out);
  fs::create_directories(out);
  write_json_file(to_json(c), (out / "config.json").string());
  log("train ", c.problem, " ", to_string(c.method), " n=", d.train.size());
  try {
    TrainOutcome t = train_model(c, d, verbose ? EpochCallback(print_row) : EpochCallback());
    write_json_file(to_json(t.model), (out / "model.json").string());
    write_json_file(to_json(t.best_valid), (out / "best_valid_model.json").string());
    if (is_nll(c.method)) write_trace(t.trace, out / "trace.csv");
    log("trained in ", t.seconds, " s");
    return t;
  } catch (const TrainingAborted& e) {
    write_trace(e.trace(), out / "trace.csv");
    log("aborted: ", e.what());
    throw;
  }
}

Evaluation evaluate_and_save(const ExperimentConfig& c, const Dataset& d, const Model& m,
                             bool oracle) {
  std::function<Vec(const Mat&)> truth;
  if (oracle) {
    const Problem p = make_problem(d.problem, d.box);
    truth = [p](const Mat& xs) {
      Vec f(xs.rows());
      for (Eigen::Index i = 0; i < xs.rows(); ++i) f(i) = p.eval(xs.row(i).transpose()).value;
      return f;
    };
  }
  const Evaluation e = evaluate_model(c, d, m, truth);
  const fs::path out(c.out);
  fs::create_directories(out);
  write_text(out / "metrics.csv", table_header() + "\n" + table_line(e.row) + "\n");
  write_scatter_csv(e, d.test.f, (out / "scatter.csv").string());
  write_json_file(to_json(e.regressor), (out / "regressor.json").string());
  return e;
}

int cmd_generate(const Common& o) {
  const ExperimentConfig c = resolve(o);
  const fs::path dir = fs::path(c.out) / "data";
  RunLog log(c.out);
  log("generate ", c.problem, " seed=", c.seed);
  const Dataset d = generate_dataset(c);
  write_dataset(d, dir);
  std::printf("%s: %lld train, %lld valid, %lld test samples in %s\n", d.problem.c_str(),
              static_cast<long long>(d.train.size()), static_cast<long long>(d.valid.size()),
              static_cast<long long>(d.test.size()), dir.string().c_str());
  return 0;
}

int cmd_train(const Common& o, const std::string& data, bool quiet) {
  const ExperimentConfig c = resolve(o, &data);
  const Dataset d = load_dataset(data_dir_of(c, data));
  RunLog log(c.out);
  const TrainOutcome t = train_and_save(c, d, log, !quiet);
  std::printf("trained %s in %.2f s -> %s\n", to_string(c.method), t.seconds,
              (fs::path(c.out) / "model.json").string().c_str());
  return 0;
}

int cmd_evaluate(const Common& o, const std::string& data, const std::string& model_path,
                 bool oracle) {
  const ExperimentConfig c = resolve(o, &data);
  const Dataset d = load_dataset(data_dir_of(c, data));
  const fs::path mp = model_path.empty() ? fs::path(c.out) / "model.json" : fs::path(model_path);
  if (!fs::exists(mp)) throw ValidationError("no model at '" + mp.string() + "'");
  const Model m = model_from_json(read_json_file(mp.string()));
  const Evaluation e = evaluate_and_save(c, d, m, oracle);
  std::printf("%s\n%s\n", table_header().c_str(), table_line(e.row).c_str());
  return 0;
}

int cmd_check_gradients(const Common& o, double tol, double step) {
  ExperimentConfig c = resolve(o);
  require(c.problem != "csv", "check-gradients needs an analytic problem");
  if (!o.samples) c.n_train = 20;
  const Problem p = make_problem(c.problem, c.box);
  const SampleSet s = sample_uniform(p.box, c.n_train, derive_seed(c.seed, 0), p.eval, p.id);
  const GradientCheck g = check_gradients(p, s, step, tol);
  for (std::size_t k = 0; k < g.rel_err.size(); ++k) {
    std::printf("sample %3zu  rel err %.3e  %s\n", k, g.rel_err[k],
                g.rel_err[k] <= tol ? "ok" : "FAIL");
  }
  std::printf("%s: %lld/%lld within %.1e (max %.3e)\n", p.id.c_str(),
              static_cast<long long>(g.samples - g.failures), static_cast<long long>(g.samples),
              tol, g.max_rel_err);
  if (g.failures > 0) throw NumericalError("gradient spot check failed");
  return 0;
}

int cmd_reproduce(const std::string& table, const Common& o, const std::vector<Eigen::Index>& ns,
                  bool dry_run) {
  PlanOptions opt;
  opt.samples = ns;
  opt.epochs = o.epochs;
  opt.seed = o.seed.value_or(1);
  opt.out = o.out.empty() ? "out/" + table : o.out;
  if (!o.box_path.empty()) opt.r0_box = box_from_json(read_json_file(o.box_path));
  const TablePlan plan = plan_table(table, opt);
  for (const std::string& n : plan.notes) std::printf("note: %s\n", n.c_str());

  if (dry_run) {
    for (const Job& j : plan.jobs) {
      std::printf("%s,%s,%lld,%s\n", j.config.problem.c_str(), j.label.c_str(),
                  static_cast<long long>(j.config.n_train), j.config.out.c_str());
    }
    std::printf("%zu jobs\n", plan.jobs.size());
    return 0;
  }

  RunLog log(opt.out);
  std::vector<TableRow> rows;
  std::map<std::pair<std::string, Eigen::Index>, Dataset> data;
  for (const Job& j : plan.jobs) {
    const ExperimentConfig& c = j.config;
    const auto key = std::make_pair(c.problem, c.n_train);
    if (!data.count(key)) {
      Dataset d = generate_dataset(c);
      write_dataset(d, fs::path(opt.out) / c.problem / ("n" + std::to_string(c.n_train)) / "data");
      data.emplace(key, std::move(d));
    }
    const Dataset& d = data.at(key);
    std::printf("%s %s %lld ... ", c.problem.c_str(), j.label.c_str(),
                static_cast<long long>(c.n_train));
    std::fflush(stdout);
    TableRow row;
    try {
      const TrainOutcome t = train_and_save(c, d, log, false);
      row = evaluate_and_save(c, d, t.model, false).row;
      std::printf("%.1f s\n", t.seconds);
    } catch (const NumericalError& e) {
      // the table still completes; the row is flagged by the band check
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row = {c.problem, j.label, c.n_train, nan, nan, nan, nan};
      std::printf("failed: %s\n", e.what());
      log(c.problem, " ", j.label, " ", c.n_train, " failed: ", e.what());
    }
    rows.push_back(row);
  }

  std::string table_csv = table_header() + "\n";
  for (const TableRow& r : rows) table_csv += table_line(r) + "\n";
  const std::vector<BandCheck> bands = check_bands(rows);
  std::string band_csv = band_header() + "\n";
  std::size_t flagged = 0;
  for (const BandCheck& b : bands) {
    band_csv += band_line(b) + "\n";
    if (!b.pass) ++flagged;
  }
  write_text(fs::path(opt.out) / (table + ".csv"), table_csv);
  write_text(fs::path(opt.out) / (table + "_bands.csv"), band_csv);
  std::printf("\n%s\n%s%zu of %zu band checks flagged\n", table_csv.c_str(), band_csv.c_str(),
              flagged, bands.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear level set learning: data, training, evaluation, tables"};
  app.require_subcommand(1);

  Common gen_o, train_o, eval_o, grad_o, rep_o;
  std::string train_data, eval_data, eval_model, table;
  bool quiet = false, oracle = false, dry_run = false;
  double tol = 1e-5, step = 1e-6;
  std::vector<Eigen::Index> rep_samples;

  CLI::App* gen = app.add_subcommand("generate", "sample a problem into CSV files");
  add_common(gen, gen_o);

  CLI::App* tr = app.add_subcommand("train", "fit a transform on a generated dataset");
  add_common(tr, train_o);
  tr->add_option("--data", train_data, "dataset directory (default <out>/data)");
  tr->add_flag("--quiet", quiet, "no per-epoch output");

  CLI::App* ev = app.add_subcommand("evaluate", "regress on the active coordinates and score");
  add_common(ev, eval_o);
  ev->add_option("--data", eval_data, "dataset directory (default <out>/data)");
  ev->add_option("--model", eval_model, "model file (default <out>/model.json)");
  ev->add_flag("--oracle", oracle, "predict with the true function instead of the regressor");

  CLI::App* rep = app.add_subcommand("reproduce", "run a full results table");
  rep->add_option("table", table, "table1 | table2")->required();
  rep->add_option("--seed", rep_o.seed, "master seed");
  rep->add_option("--out", rep_o.out, "output directory");
  rep->add_option("--epochs", rep_o.epochs, "override training epochs");
  rep->add_option("--samples", rep_samples, "override sample counts")->delimiter(',');
  rep->add_option("--box", rep_o.box_path, "R0 parameter ranges as JSON {lower, upper}")
      ->check(CLI::ExistingFile);
  rep->add_flag("--dry-run", dry_run, "list the planned jobs only");

  CLI::App* cg = app.add_subcommand("check-gradients", "finite-difference spot check");
  add_common(cg, grad_o);
  cg->add_option("--tol", tol, "relative tolerance");
  cg->add_option("--step", step, "step as a fraction of each box width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_generate(gen_o);
    if (*tr) return cmd_train(train_o, train_data, quiet);
    if (*ev) return cmd_evaluate(eval_o, eval_data, eval_model, oracle);
    if (*rep) return cmd_reproduce(table, rep_o, rep_samples, dry_run);
    if (*cg) return cmd_check_gradients(grad_o, tol, step);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
