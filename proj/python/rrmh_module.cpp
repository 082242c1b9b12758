#include "rrmh/chain.hpp"
#include "rrmh/diagnostics.hpp"
#include "rrmh/report.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  // Round trip through the json module keeps nested types faithful.
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::object& o) {
  if (py::isinstance<py::str>(o)) return json::parse(o.cast<std::string>());
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::array_t<double> state_matrix(const rrmh::ChainRecord& r, bool shadow) {
  const auto n = static_cast<py::ssize_t>(r.rows.size());
  const auto d = static_cast<py::ssize_t>(r.dim);
  py::array_t<double> out({n, d});
  auto m = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i) {
    const auto& row = r.rows[static_cast<std::size_t>(i)];
    const rrmh::Vector& x = shadow ? *row.shadow_x : row.x;
    for (py::ssize_t k = 0; k < d; ++k) m(i, k) = x[k];
  }
  return out;
}

py::dict run(const py::object& config, const std::optional<std::string>& chain_csv) {
  rrmh::ChainRecord rec;
  {
    const rrmh::ExperimentConfig cfg = rrmh::parse_config(from_py(config));
    py::gil_scoped_release release;
    rec = rrmh::run_chain(cfg);
    if (chain_csv) rrmh::write_chain_csv(rec, *chain_csv, cfg.record_timings);
  }
  py::dict out;
  out["x"] = state_matrix(rec, false);
  if (!rec.rows.empty() && rec.rows.front().shadow_x) out["shadow_x"] = state_matrix(rec, true);
  std::vector<double> ll;
  std::vector<bool> s1, s2;
  for (const auto& row : rec.rows) {
    ll.push_back(row.log_lik);
    s1.push_back(row.outcome.stage1_accepted);
    s2.push_back(row.outcome.stage2_accepted);
  }
  out["log_lik"] = py::array_t<double>(static_cast<py::ssize_t>(ll.size()), ll.data());
  out["stage1_accepted"] = s1;
  out["stage2_accepted"] = s2;
  const rrmh::AcceptanceSummary acc = rrmh::acceptance_summary(rec.flags());
  out["alpha_bar"] = acc.alpha_bar;
  out["beta_bar"] = acc.beta_bar ? py::object(py::float_(*acc.beta_bar)) : py::object(py::none());
  out["burn_in_rows"] = rec.burn_in_rows;
  out["state"] = to_py(rrmh::state_json(rec));
  out["error"] = rec.error ? py::object(py::str(*rec.error)) : py::object(py::none());
  return out;
}

}  // namespace

PYBIND11_MODULE(rrmh, m) {
  m.doc() = "Delayed-acceptance MCMC with reduced models and adaptive error models";

  // Translators run newest first, so the base class goes in first.
  auto base = py::register_exception<rrmh::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<rrmh::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<rrmh::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<rrmh::SolverError>(m, "SolverError", base.ptr());

  m.def("run", &run, py::arg("config"), py::arg("chain_csv") = py::none(),
        "Run one experiment from a config dict or JSON string; returns arrays and a summary.\n"
        "With chain_csv the chain file is also written there.");

  m.def(
      "report",
      [](const std::vector<std::string>& chains, std::optional<std::size_t> baseline, double burn_in,
         std::optional<double> t_star, std::optional<double> t) {
        std::vector<rrmh::ChainTable> tables;
        for (const auto& p : chains) tables.push_back(rrmh::read_chain_csv(p));
        rrmh::ReportOptions ro;
        ro.baseline = baseline;
        ro.burn_in = burn_in;
        ro.t_star = t_star;
        ro.t = t;
        return to_py(rrmh::make_report(tables, ro));
      },
      py::arg("chains"), py::arg("baseline") = py::none(), py::arg("burn_in") = 0.2,
      py::arg("t_star") = py::none(), py::arg("t") = py::none());

  m.def(
      "iact",
      [](const std::vector<double>& x, double c) {
        const rrmh::IactResult r = rrmh::iact(x, c);
        return py::make_tuple(r.tau, r.window, r.degenerate);
      },
      py::arg("series"), py::arg("c") = 6.0, "Returns (tau, window, degenerate)");
  m.def("ess", &rrmh::ess, py::arg("n"), py::arg("tau"));
  m.def("speedup", py::overload_cast<double, double, double, double, double>(&rrmh::speedup), py::arg("tau_mh"),
        py::arg("tau_da"), py::arg("alpha_bar"), py::arg("t_star"), py::arg("t"));
  m.def("config_hash", [](const py::object& config) {
    return rrmh::config_hash(rrmh::parse_config(from_py(config)).canonical);
  });
}
