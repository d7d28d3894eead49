#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "recursim/errors.hpp"
#include "recursim/scenario.hpp"
#include "recursim/study.hpp"
#include "recursim/validate.hpp"

namespace py = pybind11;
using namespace recursim;

namespace {

std::vector<EventHistory> simulate(const ScenarioConfig& config, unsigned workers) {
  py::gil_scoped_release release;
  return simulate_cohort(config, workers);
}

std::string dataset_csv(const ScenarioConfig& config, unsigned workers, bool emit_frailty) {
  py::gil_scoped_release release;
  const auto cohort = simulate_cohort(config, workers);
  std::ostringstream out;
  write_counting_process_csv(out, to_counting_process(cohort, emit_frailty),
                             config.covariates.size(), emit_frailty);
  return out.str();
}

std::vector<ValidationReport> validate(const ScenarioConfig& config,
                                       const std::optional<ScenarioConfig>& oracle,
                                       unsigned workers) {
  const IntensityModel model = oracle ? oracle->model : config.model;
  py::gil_scoped_release release;
  return validate_scenario(config, model, workers);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Recurrent-event simulation engine";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ExplosionError>(m, "ExplosionError", base.ptr());
  py::register_exception<StepSizeError>(m, "StepSizeError", base.ptr());
  py::register_exception<MissingDataError>(m, "MissingDataError", base.ptr());
  py::register_exception<UnsupportedCheckError>(m, "UnsupportedCheckError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("n_subjects", &ScenarioConfig::n_subjects)
      .def_readwrite("dt", &ScenarioConfig::dt)
      .def_readwrite("event_limit", &ScenarioConfig::event_limit)
      .def_property(
          "engine", [](const ScenarioConfig& c) { return to_string(c.engine); },
          [](ScenarioConfig& c, const std::string& name) { c.engine = parse_engine(name); })
      .def("validate", &ScenarioConfig::validate)
      .def("format", [](const ScenarioConfig& c) { return format_scenario(c); })
      .def("__repr__", [](const ScenarioConfig& c) {
        return "<Scenario " + to_string(classify_scenario(c)) + ", " +
               std::to_string(c.n_subjects) + " subjects>";
      });

  py::class_<EventHistory>(m, "EventHistory")
      .def_readonly("event_times", &EventHistory::event_times)
      .def_readonly("censoring_time", &EventHistory::censoring_time)
      .def_readonly("frailty", &EventHistory::frailty)
      .def_readonly("covariates", &EventHistory::covariates)
      .def_property_readonly("engine", [](const EventHistory& h) { return to_string(h.engine); })
      .def("__len__", [](const EventHistory& h) { return h.event_times.size(); });

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("name", &ValidationReport::name)
      .def_readonly("sample_size", &ValidationReport::sample_size)
      .def_readonly("statistic", &ValidationReport::statistic)
      .def_readonly("threshold", &ValidationReport::threshold)
      .def_readonly("passed", &ValidationReport::pass)
      .def_readonly("detail", &ValidationReport::detail);

  m.def("parse_scenario", [](const std::string& text) { return parse_scenario_text(text); },
        py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));
  m.def("simulate", &simulate, py::arg("scenario"), py::arg("workers") = 0);
  m.def("dataset_csv", &dataset_csv, py::arg("scenario"), py::arg("workers") = 0,
        py::arg("emit_frailty") = false);
  m.def("validate", &validate, py::arg("scenario"), py::arg("oracle") = std::nullopt,
        py::arg("workers") = 0);
  m.def("render_summary", [](const std::vector<ValidationReport>& r) { return render_summary(r); });

  m.def("kolmogorov_survival", &kolmogorov_survival, py::arg("x"));
  m.def(
      "ks_test",
      [](const std::vector<double>& sample, const std::function<double(double)>& cdf) {
        const auto r = ks_test(sample, cdf);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("sample"), py::arg("cdf"));
  m.def(
      "ks_two_sample",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = ks_two_sample(a, b);
        return py::make_tuple(r.statistic, r.p_value);
      },
      py::arg("a"), py::arg("b"));

  m.def("taxonomy", [] {
    py::list out;
    for (const auto& cell : taxonomy_catalog()) {
      out.append(py::make_tuple(to_string(cell.label), cell.keys));
    }
    return out;
  });
}
