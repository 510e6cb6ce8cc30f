#include "nll/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace nll {

const char* to_string(Method m) {
  switch (m) {
    case Method::NewNll: return "new_nll";
    case Method::OldNllHat: return "old_nll_hat";
    case Method::OldNllTilde: return "old_nll_tilde";
    case Method::ActiveSubspace: return "as";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "new_nll") return Method::NewNll;
  if (name == "old_nll_hat") return Method::OldNllHat;
  if (name == "old_nll_tilde") return Method::OldNllTilde;
  if (name == "as") return Method::ActiveSubspace;
  throw ValidationError("unknown method '" + name + "'");
}

bool is_nll(Method m) { return m != Method::ActiveSubspace; }

void ExperimentConfig::validate() const {
  validate_problem();
  if (problem == "r0") require(box.has_value(), "r0 needs user-supplied parameter ranges (box)");
  if (problem == "csv") require(!data_dir.empty(), "problem csv needs data_dir");
  require(n_train >= 1 && n_valid >= 1 && n_test >= 1, "sample counts must be positive");
  require(active_dim >= 1, "active_dim must be >= 1");
  require(layers >= 1 && tau > 0.0 && init_scale >= 0.0, "invalid network settings");
  require(train.epochs >= 1 && train.lr > 0.0 && train.log_every >= 1,
          "invalid training settings");
}

void ExperimentConfig::validate_problem() const {
  require(problem == "f4" || problem == "f5" || problem == "r0" || problem == "burgers_K" ||
              problem == "csv",
          "unknown problem '" + problem + "'");
}

LossSpec ExperimentConfig::loss(int n) const {
  switch (method) {
    case Method::NewNll: return LossSpec::new_nll(active_dim);
    case Method::OldNllHat: return LossSpec::old_hat(n, active_dim, lambda);
    case Method::OldNllTilde: return LossSpec::old_tilde(n, active_dim, lambda);
    case Method::ActiveSubspace: break;
  }
  throw ValidationError("Active Subspaces has no training loss");
}

ExperimentConfig default_config(const std::string& problem, Method method) {
  ExperimentConfig c;
  c.problem = problem;
  c.method = method;
  c.validate_problem();
  c.out = "out/" + problem + "_" + to_string(method);
  const bool old = method == Method::OldNllHat || method == Method::OldNllTilde;
  if (old) c.train.optimizer = OptimizerKind::Sgd;

  RegressorConfig local;
  local.kind = RegressorKind::LocalPoly;
  local.degree = 2;
  local.neighbors = 10;
  RegressorConfig mlp;
  mlp.kind = RegressorKind::Mlp;
  mlp.width = 20;
  mlp.epochs = 5000;
  mlp.lr = 0.05;

  if (problem == "f5") {
    c.layers = 30;
    c.train.lr = old ? 0.5 : 0.003;
    c.regressor = local;
  } else if (problem == "f4") {
    c.layers = 30;
    c.train.lr = old ? 0.02 : 0.003;
    c.regressor = mlp;
  } else if (problem == "r0") {
    c.layers = 15;
    c.train.lr = old ? 0.1 : 0.005;
    c.regressor = local;
    if (method == Method::ActiveSubspace) {
      c.regressor.kind = RegressorKind::GlobalPoly;
      c.regressor.degree = 4;
    }
  } else if (problem == "burgers_K") {
    c.layers = 7;
    c.width = 80;  // n / 2 = 2 hidden units cannot resolve the level sets
    c.train.lr = old ? 0.1 : 0.005;
    c.regressor = mlp;
    c.n_test = 500;
  }
  return c;
}

namespace {

template <typename T>
void take(const Json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json j = {
      {"problem", c.problem},
      {"data", {{"train", c.n_train}, {"valid", c.n_valid}, {"test", c.n_test}}},
      {"method", to_string(c.method)},
      {"active_dim", c.active_dim},
      {"revnet",
       {{"layers", c.layers}, {"width", c.width}, {"tau", c.tau}, {"init_scale", c.init_scale}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"lr", c.train.lr},
        {"optimizer", to_string(c.train.optimizer)},
        {"log_every", c.train.log_every},
        {"batch_size", c.train.batch_size},
        {"lambda", c.lambda}}},
      {"regressor",
       {{"kind", to_string(c.regressor.kind)},
        {"degree", c.regressor.degree},
        {"neighbors", c.regressor.neighbors},
        {"width", c.regressor.width},
        {"epochs", c.regressor.epochs},
        {"lr", c.regressor.lr}}},
      {"normalize", c.normalize},
      {"sensitivity", to_string(c.sensitivity)},
      {"seed", c.seed},
      {"out", c.out},
  };
  if (c.box) j["box"] = to_json(*c.box);
  if (!c.data_dir.empty()) j["data_dir"] = c.data_dir;
  return j;
}

ExperimentConfig config_from_json(const Json& j, ExperimentConfig c) {
  require(j.is_object(), "experiment config must be a JSON object");
  try {
    take(j, "problem", c.problem);
    if (j.contains("method")) c.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("box")) c.box = box_from_json(j.at("box"));
    take(j, "data_dir", c.data_dir);
    if (j.contains("data")) {
      const Json& d = j.at("data");
      take(d, "train", c.n_train);
      take(d, "valid", c.n_valid);
      take(d, "test", c.n_test);
    }
    take(j, "active_dim", c.active_dim);
    if (j.contains("revnet")) {
      const Json& r = j.at("revnet");
      take(r, "layers", c.layers);
      take(r, "width", c.width);
      take(r, "tau", c.tau);
      take(r, "init_scale", c.init_scale);
    }
    if (j.contains("train")) {
      const Json& t = j.at("train");
      take(t, "epochs", c.train.epochs);
      take(t, "lr", c.train.lr);
      if (t.contains("optimizer")) {
        c.train.optimizer = optimizer_from_string(t.at("optimizer").get<std::string>());
      }
      take(t, "log_every", c.train.log_every);
      take(t, "batch_size", c.train.batch_size);
      take(t, "lambda", c.lambda);
    }
    if (j.contains("regressor")) {
      const Json& r = j.at("regressor");
      if (r.contains("kind")) c.regressor.kind = regressor_from_string(r.at("kind").get<std::string>());
      take(r, "degree", c.regressor.degree);
      take(r, "neighbors", c.regressor.neighbors);
      take(r, "width", c.regressor.width);
      take(r, "epochs", c.regressor.epochs);
      take(r, "lr", c.regressor.lr);
    }
    take(j, "normalize", c.normalize);
    if (j.contains("sensitivity")) {
      c.sensitivity = sensitivity_convention_from_string(j.at("sensitivity").get<std::string>());
    }
    take(j, "seed", c.seed);
    take(j, "out", c.out);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

DomainBox bounding_box(const std::vector<const SampleSet*>& sets) {
  const int n = sets.front()->dim();
  Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  Vec hi = -lo;
  for (const SampleSet* s : sets) {
    if (s->size() == 0) continue;
    lo = lo.cwiseMin(s->x.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(s->x.colwise().maxCoeff().transpose());
  }
  for (int i = 0; i < n; ++i) {
    if (!(hi(i) > lo(i))) hi(i) = lo(i) + 1.0;  // degenerate coordinate
  }
  return {lo, hi};
}

}  // namespace

Dataset generate_dataset(const ExperimentConfig& c) {
  c.validate();
  Dataset d;
  d.problem = c.problem;
  d.seed = c.seed;
  if (c.problem == "csv") {
    const std::filesystem::path dir(c.data_dir);
    d.train = read_csv((dir / "train.csv").string());
    d.valid = read_csv((dir / "valid.csv").string());
    d.test = read_csv((dir / "test.csv").string());
    require(d.valid.dim() == d.train.dim() && d.test.dim() == d.train.dim(),
            "CSV splits disagree on the dimension");
    d.box = c.box.value_or(bounding_box({&d.train, &d.valid, &d.test}));
  } else {
    const Problem p = make_problem(c.problem, c.box);
    d.box = p.box;
    d.train = sample_uniform(p.box, c.n_train, derive_seed(c.seed, 0), p.eval, p.id);
    d.valid = sample_uniform(p.box, c.n_valid, derive_seed(c.seed, 1), p.eval, p.id);
    d.test = sample_uniform(p.box, c.n_test, derive_seed(c.seed, 2), p.eval, p.id);
  }
  for (SampleSet* s : {&d.train, &d.valid, &d.test}) {
    s->problem = d.problem;
    s->box = d.box;
  }
  d.norm = c.normalize ? Normalization::to_symmetric_unit(d.box) : Normalization::none();
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create '" + dir.string() + "': " + ec.message());
  write_csv(d.train, (dir / "train.csv").string());
  write_csv(d.valid, (dir / "valid.csv").string());
  write_csv(d.test, (dir / "test.csv").string());
  const Json meta = {
      {"problem", d.problem},
      {"dim", d.train.dim()},
      {"box", to_json(d.box)},
      {"normalization", to_json(d.norm)},
      {"seed", d.seed},
      {"splits",
       {{"train", {{"file", "train.csv"}, {"count", d.train.size()}, {"seed", derive_seed(d.seed, 0)}}},
        {"valid", {{"file", "valid.csv"}, {"count", d.valid.size()}, {"seed", derive_seed(d.seed, 1)}}},
        {"test", {{"file", "test.csv"}, {"count", d.test.size()}, {"seed", derive_seed(d.seed, 2)}}}}},
  };
  write_json_file(meta, (dir / "dataset.json").string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const Json meta = read_json_file((dir / "dataset.json").string());
  Dataset d;
  try {
    d.problem = meta.at("problem").get<std::string>();
    d.box = box_from_json(meta.at("box"));
    d.norm = normalization_from_json(meta.at("normalization"));
    d.seed = meta.value("seed", std::uint64_t{0});
  } catch (const Json::exception& e) {
    throw ValidationError("bad dataset.json: " + std::string(e.what()));
  }
  d.train = read_csv((dir / "train.csv").string());
  d.valid = read_csv((dir / "valid.csv").string());
  d.test = read_csv((dir / "test.csv").string());
  for (SampleSet* s : {&d.train, &d.valid, &d.test}) {
    require(s->dim() == d.box.dim(), "dataset split dimension disagrees with its box");
    s->problem = d.problem;
    s->box = d.box;
  }
  return d;
}

Mat Model::latent(const Mat& xs) const {
  const Mat u = norm.x_rows(xs);
  if (revnet) {
    const Mat z = forward(*revnet, Mat(revnet->pad_rows(u).transpose()));
    require(active_dim <= z.rows(), "active dimension exceeds the network dimension");
    return z.topRows(active_dim).transpose();
  }
  require(as.has_value(), "model has no transform");
  ASModel a = *as;
  a.k = active_dim;
  return project_rows(a, u);
}

Mat Model::push_forward(const SampleSet& s) const {
  if (revnet) return push_forward_gradients(*revnet, s.batch(norm));
  require(as.has_value(), "model has no transform");
  return push_forward_gradients(*as, norm.grad_rows(s.grad));
}

SensitivityReport Model::sensitivities(const SampleSet& s, SensitivityConvention c) const {
  return sensitivity_report(push_forward(s), c, to_string(method));
}

Json to_json(const Model& m) {
  Json j = {{"method", to_string(m.method)},
            {"active_dim", m.active_dim},
            {"normalization", to_json(m.norm)}};
  if (m.revnet) j["revnet"] = to_json(*m.revnet);
  if (m.as) j["active_subspace"] = to_json(*m.as);
  return j;
}

Model model_from_json(const Json& j) {
  Model m;
  try {
    m.method = method_from_string(j.at("method").get<std::string>());
    m.active_dim = j.at("active_dim").get<int>();
    m.norm = normalization_from_json(j.at("normalization"));
    if (j.contains("revnet")) m.revnet = revnet_from_json(j.at("revnet"));
    if (j.contains("active_subspace")) m.as = as_model_from_json(j.at("active_subspace"));
  } catch (const Json::exception& e) {
    throw ValidationError("bad model file: " + std::string(e.what()));
  }
  require(m.revnet.has_value() != m.as.has_value(), "model file needs exactly one transform");
  return m;
}

TrainOutcome train_model(const ExperimentConfig& c, const Dataset& d,
                         const EpochCallback& on_log) {
  c.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainOutcome out;
  out.model.method = c.method;
  out.model.active_dim = c.active_dim;
  out.model.norm = d.norm;
  const int n = d.train.dim();
  require(c.active_dim <= n + (n % 2), "active_dim exceeds the problem dimension");

  if (c.method == Method::ActiveSubspace) {
    out.model.as = fit_active_subspace(d.norm.grad_rows(d.train.grad), c.active_dim);
    out.best_valid = out.model;
  } else {
    RevNetParams p0 =
        init_params(n, c.layers, c.width, c.tau, derive_seed(c.seed, 3), c.init_scale, n % 2 == 1);
    TrainConfig tc = c.train;
    tc.seed = derive_seed(c.seed, 4);
    tc.loss = c.loss(p0.dim());
    const Batch train_batch{p0.pad_rows(d.norm.x_rows(d.train.x)),
                            p0.pad_rows(d.norm.grad_rows(d.train.grad))};
    const Batch valid_batch{p0.pad_rows(d.norm.x_rows(d.valid.x)),
                            p0.pad_rows(d.norm.grad_rows(d.valid.grad))};
    TrainResult r = train(std::move(p0), train_batch, valid_batch, tc, on_log);
    out.trace = std::move(r.trace);
    out.model.revnet = std::move(r.params);
    out.best_valid = out.model;
    out.best_valid.revnet = std::move(r.best_valid_params);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string table_label(Method m, int active_dim, const std::string& problem) {
  if (m == Method::ActiveSubspace) return "AS " + std::to_string(active_dim) + "-D";
  if (m == Method::NewNll) return "New NLL";
  if (problem == "f5") return "Old NLL " + std::to_string(active_dim);
  return "Old NLL";
}

std::string table_header() { return "problem,method,samples,sens_pct,rrmse_pct,rl1_pct,rl2_pct"; }

std::string table_line(const TableRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%lld,%.4g,%.4g,%.4g,%.4g", r.problem.c_str(),
                r.method.c_str(), static_cast<long long>(r.samples), r.sens_pct, r.rrmse_pct,
                r.rl1_pct, r.rl2_pct);
  return buf;
}

Evaluation evaluate_model(const ExperimentConfig& c, const Dataset& d, const Model& m,
                          const std::function<Vec(const Mat&)>& oracle) {
  const Mat z_train = m.latent(d.train.x);
  RegressorConfig rc = c.regressor;
  rc.seed = derive_seed(c.seed, 5);
  Evaluation e{TableRow{}, Regressor::fit(rc, z_train, d.train.f), m.latent(d.test.x), Vec()};
  e.f_pred = oracle ? oracle(d.test.x) : e.regressor.predict_rows(e.latent_test);
  require(e.f_pred.size() == d.test.size(), "prediction count mismatch");

  const SensitivityReport sens = m.sensitivities(d.test, c.sensitivity);
  e.row.problem = d.problem;
  e.row.method = table_label(m.method, m.active_dim, d.problem);
  e.row.samples = d.train.size();
  e.row.sens_pct = sens.active_percent(m.active_dim);
  e.row.rrmse_pct = 100.0 * rrmse(d.test.f, e.f_pred);
  e.row.rl1_pct = 100.0 * rl1(d.test.f, e.f_pred);
  e.row.rl2_pct = 100.0 * rl2(d.test.f, e.f_pred);
  return e;
}

void write_scatter_csv(const Evaluation& e, const Vec& f_true, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  for (Eigen::Index k = 0; k < e.latent_test.cols(); ++k) out << "z" << k + 1 << ',';
  out << "f_true,f_pred\n";
  char buf[32];
  for (Eigen::Index s = 0; s < e.latent_test.rows(); ++s) {
    for (Eigen::Index k = 0; k < e.latent_test.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,", e.latent_test(s, k));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", f_true(s));
    out << buf;
    std::snprintf(buf, sizeof buf, "%.17g\n", e.f_pred(s));
    out << buf;
  }
}

}  // namespace nll
