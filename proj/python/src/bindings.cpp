#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <foliant/geometry.hpp>
#include <foliant/json_util.hpp>
#include <foliant/scenarios.hpp>
#include <foliant/symbols.hpp>

namespace py = pybind11;
using namespace foliant;
using nlohmann::json;

namespace {

// JSON crosses the boundary as text; the Python package wraps these with dict conversion.

std::string run_config_text(const std::string& text, std::optional<std::uint64_t> seed, int threads,
                            const std::string& out) {
  ExperimentConfig cfg = parse_config(json::parse(text));
  if (seed) cfg.seed = *seed;
  if (threads > 0) set_thread_count(threads);
  ScenarioResult r;
  {
    py::gil_scoped_release release;
    r = run_scenario(cfg);
  }
  if (!out.empty()) write_artifacts(r, out);
  json j = r.report();
  json tables = json::object();
  for (const auto& [name, t] : r.tables) tables[name] = {{"header", t.header}, {"rows", t.rows}};
  j["tables"] = tables;
  return j.dump();
}

std::string catalog_text() {
  json a = json::array();
  for (const auto& s : scenario_catalog())
    a.push_back({{"name", s.name}, {"dims", s.dims}, {"runtime", s.runtime}, {"summary", s.summary}});
  return a.dump();
}

struct PyGeometry {
  ModelGeometry g;
  explicit PyGeometry(const std::string& text) : g(geometry_from_json(json::parse(text))) {}
  int p() const { return g.p; }
  int q() const { return g.q; }
  double dual_norm(const std::vector<double>& y, const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) const {
    if (int(y.size()) != g.q || xi.size() != g.p || eta.size() != g.q)
      throw Error(ErrorKind::UnsupportedDimension, "dual_norm: sizes must be (q, p, q)");
    return dual_norm_at(g, y.data(), xi, eta).norm;
  }
  Eigen::VectorXd tau(const std::vector<double>& y) const {
    if (int(y.size()) != g.q) throw Error(ErrorKind::UnsupportedDimension, "tau: y must have q entries");
    return transverse_connection(g, build_frames(g)).at(y.data()).tau();
  }
  double orthonormality_defect(int grid) const { return build_frames(g).orthonormality_defect(grid); }
};

Eigen::MatrixXcd quantize_dense(const std::string& symbol, int leaf_cutoff, double trans_cutoff) {
  const TransverseSymbol k = TransverseSymbol::from_json(json::parse(symbol));
  return quantize(k, ModeSet::box(k.p(), leaf_cutoff), ModeSet::disk(k.q(), trans_cutoff)).dense();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the foliant library";

  static py::exception<Error> err(m, "FoliantError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(err, e.what());
    } catch (const json::exception& e) {
      py::set_error(err, (std::string("ConfigInvalid: ") + e.what()).c_str());
    }
  });

  m.def("run_config", &run_config_text, py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 0,
        py::arg("out") = "");
  m.def("scenario_catalog", &catalog_text);
  m.def("quantize_dense", &quantize_dense, py::arg("symbol"), py::arg("leaf_cutoff"), py::arg("trans_cutoff"));

  py::class_<PyGeometry>(m, "Geometry")
      .def(py::init<const std::string&>())
      .def_property_readonly("p", &PyGeometry::p)
      .def_property_readonly("q", &PyGeometry::q)
      .def("dual_norm", &PyGeometry::dual_norm, py::arg("y"), py::arg("xi"), py::arg("eta"))
      .def("tau", &PyGeometry::tau, py::arg("y"))
      .def("orthonormality_defect", &PyGeometry::orthonormality_defect, py::arg("grid") = 16);
}
