#include "nll/driver.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace nll;

namespace {

ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed config JSON: ") + e.what());
  }
  require(j.is_object(), "experiment config must be a JSON object");
  const std::string problem = j.value("problem", std::string("f5"));
  const std::string method = j.value("method", std::string("new_nll"));
  ExperimentConfig c = config_from_json(j, default_config(problem, method_from_string(method)));
  c.validate();
  return c;
}

py::tuple value_grad(const ValueGrad& vg) { return py::make_tuple(vg.value, vg.grad); }

py::dict row_dict(const TableRow& r) {
  py::dict d;
  d["problem"] = r.problem;
  d["method"] = r.method;
  d["samples"] = r.samples;
  d["sens_pct"] = r.sens_pct;
  d["rrmse_pct"] = r.rrmse_pct;
  d["rl1_pct"] = r.rl1_pct;
  d["rl2_pct"] = r.rl2_pct;
  return d;
}

}  // namespace

PYBIND11_MODULE(_nll, m) {
  m.doc() = "Nonlinear level set learning core";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // problems
  m.def("f4", [](const Vec& x) { return value_grad(f4_eval_grad(x)); }, py::arg("x"));
  m.def("f5", [](const Vec& x) { return value_grad(f5_eval_grad(x)); }, py::arg("x"));
  m.def("r0", [](const Vec& theta) { return value_grad(r0_eval_grad(theta)); }, py::arg("theta"));
  m.def(
      "burgers_k",
      [](const Vec& theta, bool substep) {
        BurgersGrid g;
        g.substep = substep;
        return value_grad(burgers_k_eval_grad(theta, g));
      },
      py::arg("theta"), py::arg("substep") = true);

  // network
  py::class_<RevNetParams>(m, "RevNet")
      .def_static(
          "init",
          [](int n, int layers, int width, double tau, std::uint64_t seed, double scale,
             bool pad_odd) { return init_params(n, layers, width, tau, seed, scale, pad_odd); },
          py::arg("n"), py::arg("layers"), py::arg("width") = 0, py::arg("tau") = 0.25,
          py::arg("seed") = 1, py::arg("scale") = 0.1, py::arg("pad_odd") = false)
      .def_property_readonly("dim", &RevNetParams::dim)
      .def_property_readonly("input_dim", &RevNetParams::input_dim)
      .def_property_readonly("layers", &RevNetParams::num_layers)
      .def_property_readonly("width", &RevNetParams::width)
      .def_property_readonly("tau", &RevNetParams::tau)
      .def_property("values", &RevNetParams::values, &RevNetParams::set_values)
      // rows are samples
      .def("forward", [](const RevNetParams& p, const Mat& xs) {
        return Mat(forward(p, Mat(xs.transpose())).transpose());
      })
      .def("inverse", [](const RevNetParams& p, const Mat& zs) {
        return Mat(inverse(p, Mat(zs.transpose())).transpose());
      })
      .def("inverse_jacobian", [](const RevNetParams& p, const Vec& z) {
        return inverse_jacobian(p, z);
      })
      .def("to_json", [](const RevNetParams& p) { return to_json(p).dump(); })
      .def_static("from_json", [](const std::string& s) { return revnet_from_json(Json::parse(s)); });

  m.def(
      "loss_gradient",
      [](const RevNetParams& p, const Mat& xs, const Mat& grads, const std::string& kind,
         int active_count, double lambda) {
        const LossKind k = loss_kind_from_string(kind);
        const LossSpec spec = k == LossKind::NewL    ? LossSpec::new_nll(active_count)
                              : k == LossKind::OldLhat ? LossSpec::old_hat(p.dim(), active_count, lambda)
                                                       : LossSpec::old_tilde(p.dim(), active_count, lambda);
        const LossGradient g = loss_gradient(p, Batch{xs, grads}, spec);
        return py::make_tuple(g.value, g.grad);
      },
      py::arg("params"), py::arg("xs"), py::arg("grads"), py::arg("kind") = "new",
      py::arg("active_count") = 1, py::arg("lam") = 1.0);

  // active subspaces and metrics
  m.def(
      "active_subspace",
      [](const Mat& grads, int k) {
        const ASModel a = fit_active_subspace(grads, k);
        return py::make_tuple(a.eigvals, a.W);
      },
      py::arg("grads"), py::arg("k") = 1);
  m.def(
      "sensitivity_percent",
      [](const Mat& push_grads, const std::string& convention) {
        return sensitivity_report(push_grads, sensitivity_convention_from_string(convention), "")
            .percent;
      },
      py::arg("push_grads"), py::arg("convention") = "abs_mean");
  m.def("rrmse", &rrmse);
  m.def("rl1", &rl1);
  m.def("rl2", &rl2);

  // pipeline
  m.def("default_config", [](const std::string& problem, const std::string& method) {
    return to_json(default_config(problem, method_from_string(method))).dump();
  });

  py::class_<SampleSet>(m, "SampleSet")
      .def_readonly("x", &SampleSet::x)
      .def_readonly("f", &SampleSet::f)
      .def_readonly("grad", &SampleSet::grad)
      .def("__len__", &SampleSet::size);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("problem", &Dataset::problem)
      .def_readonly("train", &Dataset::train)
      .def_readonly("valid", &Dataset::valid)
      .def_readonly("test", &Dataset::test)
      .def("write", [](const Dataset& d, const std::string& dir) { write_dataset(d, dir); })
      .def_static("read", [](const std::string& dir) { return read_dataset(dir); });

  m.def("generate_dataset", [](const std::string& config) {
    return generate_dataset(parse_config(config));
  });

  py::class_<Model>(m, "Model")
      .def_readonly("method", &Model::method)
      .def_readonly("active_dim", &Model::active_dim)
      .def("latent", &Model::latent)
      .def("sensitivities",
           [](const Model& md, const SampleSet& s, const std::string& convention) {
             return md.sensitivities(s, sensitivity_convention_from_string(convention)).percent;
           },
           py::arg("samples"), py::arg("convention") = "abs_mean")
      .def("to_json", [](const Model& md) { return to_json(md).dump(); })
      .def_static("from_json", [](const std::string& s) { return model_from_json(Json::parse(s)); });
  py::enum_<Method>(m, "Method")
      .value("new_nll", Method::NewNll)
      .value("old_nll_hat", Method::OldNllHat)
      .value("old_nll_tilde", Method::OldNllTilde)
      .value("active_subspace", Method::ActiveSubspace);

  m.def(
      "train_model",
      [](const std::string& config, const Dataset& d) {
        const ExperimentConfig c = parse_config(config);
        TrainOutcome t;
        {
          py::gil_scoped_release release;
          t = train_model(c, d);
        }
        py::list trace;
        for (const TraceRow& r : t.trace.rows) {
          trace.append(py::make_tuple(r.epoch, r.train_loss, r.valid_loss, r.train_rel_pct,
                                      r.valid_rel_pct));
        }
        return py::make_tuple(t.model, t.best_valid, trace);
      },
      py::arg("config"), py::arg("dataset"));

  m.def(
      "evaluate_model",
      [](const std::string& config, const Dataset& d, const Model& md) {
        const Evaluation e = evaluate_model(parse_config(config), d, md);
        py::dict out = row_dict(e.row);
        out["latent_test"] = e.latent_test;
        out["f_pred"] = e.f_pred;
        return out;
      },
      py::arg("config"), py::arg("dataset"), py::arg("model"));

  m.def("table_plan", [](const std::string& id) {
    py::list jobs;
    for (const Job& j : plan_table(id, PlanOptions{}).jobs) {
      jobs.append(py::make_tuple(j.config.problem, j.label, j.config.n_train));
    }
    return jobs;
  });
  m.def("reference_row", [](const std::string& problem, const std::string& label,
                            Eigen::Index samples) -> py::object {
    const auto r = reference_row(problem, label, samples);
    if (!r) return py::none();
    return py::make_tuple(r->sens_pct, r->rrmse_pct, r->rl1_pct, r->rl2_pct);
  });
}
