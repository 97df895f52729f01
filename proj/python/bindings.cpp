#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lowcon/designs.hpp"
#include "lowcon/error.hpp"
#include "lowcon/estimators.hpp"
#include "lowcon/harness.hpp"
#include "lowcon/linalg.hpp"
#include "lowcon/samplers.hpp"

namespace py = pybind11;
using namespace lowcon;

namespace {

py::dict selection_dict(const samplers::SubsampleSelection& s) {
  py::dict d;
  d["indices"] = s.indices;
  d["weights"] = s.weights ? py::cast(*s.weights) : py::none();
  d["method"] = std::string(samplers::method_name(s.method));
  d["kappa"] = s.diagnostics.kappa_sub;
  return d;
}

harness::ExperimentConfig config_from(const py::dict& cfg) {
  const auto json_mod = py::module_::import("json");
  const std::string text = py::str(json_mod.attr("dumps")(cfg));
  return harness::parse_config(nlohmann::json::parse(text));
}

py::list rows_to_list(const std::vector<harness::ResultRow>& rows) {
  py::list out;
  for (const auto& r : rows) {
    py::dict d;
    d["method"] = r.method;
    d["dist"] = r.dist;
    d["misspec"] = r.misspec;
    d["n"] = r.n;
    d["p"] = r.p;
    d["r"] = r.r;
    d["theta"] = r.theta;
    d["replicate_count"] = r.replicate_count;
    d["mse"] = r.mse;
    d["log_mse"] = r.log_mse;
    d["median_kappa"] = r.median_kappa;
    d["failed"] = r.failed;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Subsampling for linear regression under measurement constraints.";

  static py::exception<Error> lowcon_error(m, "LowconError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(lowcon_error, e.what());
    }
  });

  m.def("lhd_levels", &designs::lhd_levels, py::arg("r"));
  m.def(
      "generate_olhd",
      [](Index r, Index p, std::uint64_t seed) {
        Rng rng(seed);
        const auto d = designs::generate_olhd(r, p, rng);
        return py::make_tuple(d.points, d.kappa);
      },
      py::arg("r"), py::arg("p"), py::arg("seed") = 1, "Returns (points, kappa).");

  m.def("singular_values", [](const Matrix& a) { return linalg::singular_values(a).values; }, py::arg("a"));
  m.def("condition_number", &linalg::condition_number_info, py::arg("x"));
  m.def("leverage_scores", &linalg::leverage_scores, py::arg("x"));
  m.def("least_squares", &linalg::least_squares, py::arg("x"), py::arg("y"), py::arg("weights") = py::none());

  m.def(
      "select",
      [](const std::string& method, const Matrix& x, Index r, std::uint64_t seed, double theta, double slev_alpha) {
        Rng rng(seed);
        samplers::SamplerParams params;
        params.slev_alpha = slev_alpha;
        params.lowcon.theta = theta;
        return selection_dict(samplers::select(samplers::parse_method(method), x, x, r, rng, params));
      },
      py::arg("method"), py::arg("x"), py::arg("r"), py::arg("seed") = 1, py::arg("theta") = 1.0,
      py::arg("slev_alpha") = 0.9);

  m.def(
      "worst_case_mse",
      [](const Matrix& x, double sigma2, double alpha) {
        const auto wc = estimators::worst_case_mse(x, sigma2, alpha);
        py::dict d;
        d["bound"] = wc.bound;
        d["variance_term"] = wc.variance_term;
        d["bias_term"] = wc.bias_term;
        d["h_star"] = wc.h_star;
        return d;
      },
      py::arg("x"), py::arg("sigma2"), py::arg("alpha"));
  m.def(
      "mse_decompose",
      [](const Matrix& x, const Vector& h, double sigma2) {
        const auto rep = estimators::mse_decompose(x, h, sigma2);
        return py::make_tuple(rep.variance_term, rep.bias_sq_term, rep.total);
      },
      py::arg("x"), py::arg("h"), py::arg("sigma2"), "Returns (variance, bias_sq, total).");
  m.def(
      "fit_huber_m", [](const Matrix& x, const Vector& y) { return estimators::fit_huber_m(x, y).beta; },
      py::arg("x"), py::arg("y"));

  m.def(
      "run_simulation",
      [](const py::dict& cfg) {
        const auto config = config_from(cfg);
        py::gil_scoped_release release;
        auto rows = config.mode == harness::Mode::Toy ? harness::run_toy(config) : harness::run_simulation(config);
        py::gil_scoped_acquire acquire;
        return rows_to_list(rows);
      },
      py::arg("config"), "Runs a config (same keys as the JSON file) and returns one dict per cell.");
  m.def(
      "results_csv",
      [](const py::dict& cfg) {
        const auto config = config_from(cfg);
        py::gil_scoped_release release;
        return harness::results_csv(config.mode == harness::Mode::Toy ? harness::run_toy(config)
                                                                      : harness::run_simulation(config));
      },
      py::arg("config"));
}
