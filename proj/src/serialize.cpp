#include "nll/serialize.hpp"

#include <fstream>

namespace nll {

Json to_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

Vec vec_from_json(const Json& j) {
  require(j.is_array(), "expected a JSON array of numbers");
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat mat_from_json(const Json& j) {
  require(j.is_array(), "expected a JSON array of rows");
  if (j.empty()) return Mat(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Mat m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec row = vec_from_json(j[i]);
    require(row.size() == cols, "ragged matrix in JSON");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

Json to_json(const RevNetParams& p) {
  Json layers = Json::array();
  for (int l = 0; l < p.num_layers(); ++l) {
    const auto v = p.layer(l);
    layers.push_back({{"K1", to_json(Mat(v.K1))},
                      {"b1", to_json(Vec(v.b1))},
                      {"K2", to_json(Mat(v.K2))},
                      {"b2", to_json(Vec(v.b2))}});
  }
  return {{"n", p.dim()},        {"input_dim", p.input_dim()}, {"L", p.num_layers()},
          {"m", p.width()},      {"tau", p.tau()},             {"layers", layers}};
}

RevNetParams revnet_from_json(const Json& j) {
  const int n = j.at("n").get<int>();
  RevNetParams p(n, j.at("L").get<int>(), j.at("m").get<int>(), j.at("tau").get<double>(),
                 j.value("input_dim", n));
  const Json& layers = j.at("layers");
  require(static_cast<int>(layers.size()) == p.num_layers(), "layer count mismatch in JSON");
  Vec values = p.values();
  for (int l = 0; l < p.num_layers(); ++l) {
    auto v = p.layer_of(values, l);
    const Mat k1 = mat_from_json(layers[l].at("K1"));
    const Mat k2 = mat_from_json(layers[l].at("K2"));
    const Vec b1 = vec_from_json(layers[l].at("b1"));
    const Vec b2 = vec_from_json(layers[l].at("b2"));
    require(k1.rows() == v.K1.rows() && k1.cols() == v.K1.cols() && k2.rows() == v.K2.rows() &&
                k2.cols() == v.K2.cols() && b1.size() == v.b1.size() && b2.size() == v.b2.size(),
            "layer shape mismatch in JSON");
    v.K1 = k1;
    v.K2 = k2;
    v.b1 = b1;
    v.b2 = b2;
  }
  p.set_values(values);
  return p;
}

Json to_json(const ASModel& m) {
  return {{"C", to_json(m.C)}, {"eigvals", to_json(m.eigvals)}, {"W", to_json(m.W)}, {"k", m.k}};
}

ASModel as_model_from_json(const Json& j) {
  ASModel m;
  m.C = mat_from_json(j.at("C"));
  m.eigvals = vec_from_json(j.at("eigvals"));
  m.W = mat_from_json(j.at("W"));
  m.k = j.at("k").get<int>();
  require(m.W.rows() == m.W.cols() && m.eigvals.size() == m.W.rows() && m.k >= 1 &&
              m.k <= m.W.rows(),
          "inconsistent active subspace model in JSON");
  return m;
}

Json to_json(const Regressor& r) {
  const RegressorConfig& c = r.config();
  Json j = {{"kind", to_string(c.kind)}, {"degree", c.degree}, {"neighbors", c.neighbors},
            {"width", c.width},          {"epochs", c.epochs}, {"lr", c.lr},
            {"seed", c.seed},            {"dim", r.latent_dim()}};
  switch (c.kind) {
    case RegressorKind::LocalPoly:
      j["train_z"] = to_json(r.train_z());
      j["train_f"] = to_json(r.train_f());
      break;
    case RegressorKind::GlobalPoly:
      j["coefficients"] = to_json(r.coefficients());
      j["rank_deficient"] = r.rank_deficient();
      break;
    case RegressorKind::Mlp: {
      const MlpWeights& w = r.mlp();
      j["W1"] = to_json(w.W1);
      j["b1"] = to_json(w.b1);
      j["W2"] = to_json(w.W2);
      j["b2"] = to_json(w.b2);
      j["w3"] = to_json(w.w3);
      j["b3"] = w.b3;
      j["input_mean"] = to_json(r.input_mean());
      j["input_scale"] = to_json(r.input_scale());
      j["output_mean"] = r.output_mean();
      j["output_scale"] = r.output_scale();
      break;
    }
  }
  return j;
}

Regressor regressor_from_json(const Json& j) {
  RegressorConfig c;
  c.kind = regressor_from_string(j.at("kind").get<std::string>());
  c.degree = j.at("degree").get<int>();
  c.neighbors = j.at("neighbors").get<int>();
  c.width = j.at("width").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const int dim = j.at("dim").get<int>();
  switch (c.kind) {
    case RegressorKind::LocalPoly:
      return Regressor::local_poly(c, mat_from_json(j.at("train_z")),
                                   vec_from_json(j.at("train_f")));
    case RegressorKind::GlobalPoly:
      return Regressor::global_poly(c, dim, vec_from_json(j.at("coefficients")),
                                    j.value("rank_deficient", false));
    case RegressorKind::Mlp: {
      MlpWeights w;
      w.W1 = mat_from_json(j.at("W1"));
      w.b1 = vec_from_json(j.at("b1"));
      w.W2 = mat_from_json(j.at("W2"));
      w.b2 = vec_from_json(j.at("b2"));
      w.w3 = vec_from_json(j.at("w3"));
      w.b3 = j.at("b3").get<double>();
      return Regressor::mlp(c, std::move(w), vec_from_json(j.at("input_mean")),
                            vec_from_json(j.at("input_scale")), j.at("output_mean").get<double>(),
                            j.at("output_scale").get<double>());
    }
  }
  throw ValidationError("unknown regressor kind in JSON");
}

Json to_json(const DomainBox& b) { return {{"lower", to_json(b.lower)}, {"upper", to_json(b.upper)}}; }

DomainBox box_from_json(const Json& j) {
  DomainBox b{vec_from_json(j.at("lower")), vec_from_json(j.at("upper"))};
  b.validate();
  return b;
}

Json to_json(const Normalization& n) {
  if (!n.enabled) return {{"kind", "none"}};
  return {{"kind", "symmetric_unit"}, {"lower", to_json(n.lower)}, {"upper", to_json(n.upper)}};
}

Normalization normalization_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "none") return Normalization::none();
  require(kind == "symmetric_unit", "unknown normalization '" + kind + "'");
  return Normalization::to_symmetric_unit(box_from_json(j));
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace nll
