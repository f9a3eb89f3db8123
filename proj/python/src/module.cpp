// Python bindings. Structured results cross the boundary as JSON text and
// are decoded by the pure-Python wrapper.

#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "voshm/config.hpp"
#include "voshm/errors.hpp"
#include "voshm/lifecycle.hpp"
#include "voshm/reliability.hpp"
#include "voshm/report.hpp"

namespace py = pybind11;
using namespace voshm;

namespace {

EnvParams env_from(const std::vector<double>& v) {
    if (v.size() != EnvParams::dim) throw ConfigError("expected 5 parameters (slope, intercept, step, center, width)");
    std::array<double, EnvParams::dim> a{};
    std::copy(v.begin(), v.end(), a.begin());
    return EnvParams::from_array(a);
}

RunConfig config_from(const std::string& text, const std::string& format) {
    RunConfig c = parse_config(text, format == "json" ? ConfigFormat::json : ConfigFormat::ini);
    c.validate();
    return c;
}

std::string run_voshm(const std::string& text, const std::string& format) {
    const RunConfig c = config_from(text, format);
    py::gil_scoped_release release;
    const StudyContext ctx = build_context(c);
    ThetaCache cache;
    const auto p = voshm_estimate(c.policy, c.shm_policy(), c.case_config, ctx, c.study_options(), &cache);
    nlohmann::json doc;
    doc["voshm"] = estimate_json(p.difference);
    doc["inspection_only"] = cost_estimate_json(p.baseline);
    doc["shm"] = cost_estimate_json(p.alternative);
    doc["excluded"] = p.excluded;
    doc["differences"] = p.differences;
    return doc.dump();
}

std::string run_expected_cost(const std::string& text, const std::string& format) {
    const RunConfig c = config_from(text, format);
    py::gil_scoped_release release;
    const StudyContext ctx = build_context(c);
    const PolicyHeuristics policy = c.mode == Mode::shm ? c.shm_policy() : c.policy;
    return cost_estimate_json(expected_cost(c.mode, policy, c.case_config, ctx, c.study_options())).dump();
}

std::string scenario_json(std::uint64_t seed, std::uint64_t index, double horizon) {
    DeteriorationParams p;
    Rng rng = make_rng(seed, index, StreamId::scenario);
    return sample_scenario(p, horizon, rng).to_json().dump();
}

std::vector<double> frequencies(double x, double e) {
    static const BridgeModel model{BridgeConfig{}};
    return model.modal_analysis(x, e).frequencies();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Value of structural health monitoring: compiled core";

    // Translators are tried newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<PrerequisiteError>(m, "PrerequisiteError", PyExc_FileNotFoundError);

    m.def("theta", [](const std::vector<double>& params, double t) { return theta_of_temperature(env_from(params), t); },
          py::arg("params"), py::arg("temperature"));
    m.def("frequencies", &frequencies, py::arg("x"), py::arg("e") = BridgeConfig{}.nominal_youngs_modulus,
          "Lowest natural frequencies (Hz) of the reference bridge.");
    m.def("damaged_support_stiffness", &damaged_support_stiffness, py::arg("k0"), py::arg("x"));
    m.def("discount_factor", &discount_factor, py::arg("t"), py::arg("r"));
    m.def("demand_exceedance", [](double r) { return demand_exceedance(GumbelDemand{}, r); }, py::arg("r"));
    m.def("hazard_rate",
          [](double pk, double pk1, const std::string& convention) {
              return hazard_rate(pk, pk1, parse_hazard_convention(convention));
          },
          py::arg("pr_k"), py::arg("pr_k_minus_1"), py::arg("convention") = "survival");
    m.def("accumulated_failure", [](const std::vector<double>& p) { return accumulated_failure_given_path(p); },
          py::arg("interval_probs"));
    m.def("resolve_config", [](const std::string& text, const std::string& format) { return to_ini(config_from(text, format)); },
          py::arg("text") = "", py::arg("format") = "ini");
    m.def("scenario_json", &scenario_json, py::arg("seed"), py::arg("index"), py::arg("horizon") = 50.0);
    m.def("voshm_json", &run_voshm, py::arg("text"), py::arg("format") = "ini");
    m.def("expected_cost_json", &run_expected_cost, py::arg("text"), py::arg("format") = "ini");
}
