#include "voshm/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/json_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isnan(v)) {
        throw ConfigError(fmt::format("'{}' is not a number", text), key);
    }
    return v;
}

long long parse_integer(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size()) throw ConfigError(fmt::format("'{}' is not an integer", text), key);
    return v;
}

int parse_int(const std::string& text, const std::string& key) {
    const long long v = parse_integer(text, key);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError("integer out of range", key);
    }
    return static_cast<int>(v);
}

bool parse_bool(const std::string& text, const std::string& key) {
    const std::string s = trim(text);
    if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "off" || s == "0" || s == "no") return false;
    throw ConfigError(fmt::format("'{}' is not a boolean", text), key);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string num(double v) { return fmt::format("{}", v); }

template <class T>
std::string join(const T& values) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out += ", ";
        out += fmt::format("{}", v);
    }
    return out;
}

struct Field {
    std::function<void(const std::string&, const std::string&)> set;  // (value, key path)
    std::function<std::string()> get;
};

using Section = std::vector<std::pair<std::string, Field>>;
using Schema = std::vector<std::pair<std::string, Section>>;

Field real(double& target) {
    return {[&target](const std::string& v, const std::string& k) { target = parse_double(v, k); },
            [&target] { return num(target); }};
}

Field integer(int& target) {
    return {[&target](const std::string& v, const std::string& k) { target = parse_int(v, k); },
            [&target] { return fmt::format("{}", target); }};
}

Field flag(bool& target) {
    return {[&target](const std::string& v, const std::string& k) { target = parse_bool(v, k); },
            [&target] { return target ? std::string("true") : std::string("false"); }};
}

Field text(std::string& target) {
    return {[&target](const std::string& v, const std::string&) { target = trim(v); }, [&target] { return target; }};
}

template <std::size_t N>
Field real_array(std::array<double, N>& target) {
    return {[&target](const std::string& v, const std::string& k) {
                const auto items = split_list(v);
                if (items.size() != N) throw ConfigError(fmt::format("expected {} comma-separated values", N), k);
                for (std::size_t i = 0; i < N; ++i) target[i] = parse_double(items[i], fmt::format("{}[{}]", k, i));
            },
            [&target] { return join(target); }};
}

// Binds every accepted key to its field. case.number is applied first by the
// loader so that the other case keys override its preset.
Schema make_schema(RunConfig& c) {
    auto& b = c.bridge;
    auto& env = c.env_prior.marginals;
    auto& d = c.deterioration;
    Schema s;
    s.push_back({"model",
                 {{"spans_m", real_array(b.span_lengths)},
                  {"section_area_m2", real(b.section_area)},
                  {"section_inertia_m4", real(b.section_inertia)},
                  {"density_kgm3", real(b.density)},
                  {"elements_per_span", integer(b.elements_per_span)},
                  {"Kx_Nm", real(b.support_stiffness_horizontal)},
                  {"Ky_Nm", real_array(b.support_stiffness_vertical)},
                  {"E0_Pa", real(b.nominal_youngs_modulus)},
                  {"n_modes", integer(b.n_modes)},
                  {"sensor_nodes",
                   {[&b](const std::string& v, const std::string& k) {
                        b.sensor_nodes.clear();
                        for (const auto& item : split_list(v)) b.sensor_nodes.push_back(parse_int(item, k));
                    },
                    [&b] { return join(b.sensor_nodes); }}},
                  {"surrogate_degree", integer(c.surrogate.degree)},
                  {"surrogate_ridge", real(c.surrogate.ridge)},
                  {"surrogate", text(c.surrogate_path)}}});
    s.push_back({"env",
                 {{"slope_mean", real(env[0].mean)},
                  {"slope_cv", real(env[0].cv)},
                  {"intercept_mean", real(env[1].mean)},
                  {"intercept_cv", real(env[1].cv)},
                  {"step_mean", real(env[2].mean)},
                  {"step_cv", real(env[2].cv)},
                  {"center_mean", real(env[3].mean)},
                  {"center_cv", real(env[3].cv)},
                  {"width_mean", real(env[4].mean)},
                  {"width_cv", real(env[4].cv)},
                  {"c_lambda", real(c.observation.c_lambda)},
                  {"n_t", integer(c.env_learning.n_t)},
                  {"learning",
                   {[&c](const std::string& v, const std::string&) { c.env_learning.mode = parse_env_learning_mode(trim(v)); },
                    [&c] { return to_string(c.env_learning.mode); }}},
                  {"posterior", text(c.env_posterior_path)},
                  {"tmcmc_samples", integer(c.env_learning.tmcmc.n_samples)},
                  {"tmcmc_target_cov", real(c.env_learning.tmcmc.target_cov)},
                  {"tmcmc_mcmc_steps", integer(c.env_learning.tmcmc.mcmc_steps)},
                  {"temperature_mean", real(c.temperature.mean)},
                  {"temperature_amplitude", real(c.temperature.amplitude)},
                  {"temperature_phase", real(c.temperature.phase)},
                  {"temperature_noise_sd", real(c.temperature.noise_sd)}}});
    s.push_back({"deterioration",
                 {{"A_mean", real(d.a.mean)},
                  {"A_cv", real(d.a.cv)},
                  {"B_mean", real(d.b.mean)},
                  {"B_cv", real(d.b.cv)},
                  {"omega_mean", real(d.omega_mean)},
                  {"omega_sd", real(d.omega_sd)},
                  {"shock_rate", real(d.shock_rate)},
                  {"D_mean", real(d.shock_magnitude.mean)},
                  {"D_cv", real(d.shock_magnitude.cv)},
                  {"horizon_years", real(d.horizon_years)}}});
    s.push_back({"observation",
                 {{"cv_insp", real(c.observation.cv_insp)},
                  {"sigma_floor", real(c.observation.sigma_floor)},
                  {"modes_min", integer(c.observation.modes_min)},
                  {"modes_max", integer(c.observation.modes_max)}}});
    s.push_back({"filter",
                 {{"ess_threshold", real(c.filter.ess_threshold)},
                  {"max_components", integer(c.filter.max_components)},
                  {"em_max_iterations", integer(c.filter.em.max_iterations)},
                  {"em_tolerance", real(c.filter.em.tolerance)},
                  {"em_regularization", real(c.filter.em.regularization)}}});
    s.push_back({"reliability",
                 {{"gumbel_a", real(c.gumbel.scale)},
                  {"gumbel_b", real(c.gumbel.location)},
                  {"hazard_convention",
                   {[&c](const std::string& v, const std::string&) { c.filter.hazard_convention = parse_hazard_convention(trim(v)); },
                    [&c] { return to_string(c.filter.hazard_convention); }}}}});
    s.push_back({"costs",
                 {{"c_F", real(c.costs.c_F)},
                  {"c_I", real(c.costs.c_I)},
                  {"c_R", real(c.costs.c_R)},
                  {"r", real(c.costs.r)},
                  {"c_clsdn", real(c.costs.c_clsdn)},
                  {"delay_days", real(c.case_config.delay_days)}}});
    s.push_back({"policy",
                 {{"p_th_I", real(c.policy.p_th_I)},
                  {"p_th_R", real(c.policy.p_th_R)},
                  {"dt_I", real(c.policy.delta_t_I)},
                  {"shm_dt_I", real(c.shm_dt_I)}}});
    s.push_back({"case",
                 {{"number", integer(c.case_number)},
                  {"mode",
                   {[&c](const std::string& v, const std::string&) { c.mode = parse_mode(trim(v)); },
                    [&c] { return to_string(c.mode); }}},
                  {"shock_observability",
                   {[&c](const std::string& v, const std::string& k) {
                        const std::string t = trim(v);
                        if (t == "observed") c.case_config.shocks = ShockObservability::observed;
                        else if (t == "unobserved") c.case_config.shocks = ShockObservability::unobserved;
                        else throw ConfigError(fmt::format("unknown value '{}' (observed, unobserved)", t), k);
                    },
                    [&c] {
                        return std::string(c.case_config.shocks == ShockObservability::observed ? "observed" : "unobserved");
                    }}},
                  {"closedown", flag(c.case_config.closedown)},
                  {"imposed_repair_threshold",
                   {[&c](const std::string& v, const std::string& k) {
                        const std::string t = trim(v);
                        if (t.empty() || t == "none") c.case_config.imposed_repair_threshold.reset();
                        else c.case_config.imposed_repair_threshold = parse_double(t, k);
                    },
                    [&c] {
                        return c.case_config.imposed_repair_threshold ? num(*c.case_config.imposed_repair_threshold)
                                                                      : std::string("none");
                    }}}}});
    s.push_back({"mc",
                 {{"n_mcs", integer(c.mc.n_mcs)},
                  {"n_p", integer(c.mc.n_p)},
                  {"seed",
                   {[&c](const std::string& v, const std::string& k) {
                        const long long s = parse_integer(v, k);
                        if (s < 0) throw ConfigError("must be non-negative", k);
                        c.mc.seed = static_cast<std::uint64_t>(s);
                    },
                    [&c] { return fmt::format("{}", c.mc.seed); }}},
                  {"workers", integer(c.mc.workers)},
                  {"max_degenerate_fraction", real(c.mc.max_degenerate_fraction)}}});
    s.push_back({"optimize",
                 {{"p_min", real(c.optimize.p_min)},
                  {"p_max", real(c.optimize.p_max)},
                  {"points", integer(c.optimize.points)},
                  {"search_shm", flag(c.optimize.search_shm)}}});
    s.push_back({"output",
                 {{"dir", text(c.output.dir)},
                  {"traces",
                   {[&c](const std::string& v, const std::string& k) {
                        c.output.traces.clear();
                        for (const auto& item : split_list(v)) {
                            const long long id = parse_integer(item, k);
                            if (id < 0) throw ConfigError("scenario ids must be non-negative", k);
                            c.output.traces.push_back(static_cast<std::uint64_t>(id));
                        }
                    },
                    [&c] { return join(c.output.traces); }}}}});
    return s;
}

// JSON arrays arrive as children with empty keys; fold them into a list.
std::string leaf_value(const pt::ptree& node) {
    if (node.empty()) return node.data();
    std::vector<std::string> items;
    for (const auto& [k, child] : node) {
        if (!k.empty() || !child.empty()) return {};
        items.push_back(child.data());
    }
    return join(items);
}

bool is_leaf(const pt::ptree& node) {
    if (node.empty()) return true;
    for (const auto& [k, child] : node) {
        if (!k.empty() || !child.empty()) return false;
    }
    return true;
}

RunConfig from_tree(const pt::ptree& tree) {
    RunConfig c;
    Schema schema = make_schema(c);
    std::map<std::string, std::map<std::string, std::string>> values;
    for (const auto& [section, node] : tree) {
        if (is_leaf(node) && !node.data().empty()) {
            throw ConfigError("top-level keys are not allowed; use sections", section);
        }
        const auto it = std::find_if(schema.begin(), schema.end(), [&](const auto& s) { return s.first == section; });
        if (it == schema.end()) throw ConfigError("unknown section", section);
        for (const auto& [key, child] : node) {
            const std::string path = section + "." + key;
            const auto f = std::find_if(it->second.begin(), it->second.end(), [&](const auto& e) { return e.first == key; });
            if (f == it->second.end()) throw ConfigError("unknown key", path);
            if (!is_leaf(child)) throw ConfigError("expected a value", path);
            if (!values[section].emplace(key, leaf_value(child)).second) throw ConfigError("duplicate key", path);
        }
    }
    // The case preset first, explicit case keys on top.
    if (auto n = values["case"].find("number"); n != values["case"].end()) {
        const int number = parse_int(n->second, "case.number");
        if (number != 0) c.set_case(number);
        c.case_number = number;
    } else {
        c.set_case(1);
    }
    for (auto& [section, fields] : schema) {
        for (auto& [key, field] : fields) {
            if (section == "case" && key == "number") continue;
            const auto& sec = values[section];
            if (auto v = sec.find(key); v != sec.end()) field.set(v->second, section + "." + key);
        }
    }
    c.filter.n_particles = c.mc.n_p;
    c.validate();
    return c;
}

}  // namespace

StudyOptions RunConfig::study_options() const {
    StudyOptions o;
    o.seed = mc.seed;
    o.n_mcs = mc.n_mcs;
    o.workers = mc.workers;
    o.max_degenerate_fraction = mc.max_degenerate_fraction;
    return o;
}

void RunConfig::set_case(int number) {
    const double delay = case_config.delay_days;
    case_config = CaseStudyConfig::preset(number);
    case_config.delay_days = delay;
    case_number = number;
}

void RunConfig::validate() const {
    bridge.validate();
    if (surrogate.degree < 1 || surrogate.degree > 12) throw ConfigError("must lie in [1, 12]", "model.surrogate_degree");
    if (!(surrogate.ridge >= 0.0)) throw ConfigError("must be non-negative", "model.surrogate_ridge");
    const char* env_keys[] = {"slope", "intercept", "step", "center", "width"};
    for (std::size_t i = 0; i < env_prior.marginals.size(); ++i) {
        const auto& m = env_prior.marginals[i];
        if (!std::isfinite(m.mean)) throw ConfigError("must be finite", fmt::format("env.{}_mean", env_keys[i]));
        if (!(m.cv > 0.0) || !std::isfinite(m.cv)) throw ConfigError("must be positive", fmt::format("env.{}_cv", env_keys[i]));
    }
    if (!(env_prior.marginals[4].mean > 0.0)) throw ConfigError("transition width must be positive", "env.width_mean");
    if (env_learning.n_t < 2) throw ConfigError("must be at least 2", "env.n_t");
    if (env_learning.tmcmc.n_samples < 500) throw ConfigError("must be at least 500", "env.tmcmc_samples");
    if (!(env_learning.tmcmc.target_cov > 0.0)) throw ConfigError("must be positive", "env.tmcmc_target_cov");
    if (env_learning.tmcmc.mcmc_steps < 1) throw ConfigError("must be at least 1", "env.tmcmc_mcmc_steps");
    if (env_learning.mode == EnvLearningMode::fixed && env_posterior_path.empty()) {
        throw ConfigError("learning mode 'fixed' needs env.posterior", "env.learning");
    }
    if (!(temperature.noise_sd >= 0.0)) throw ConfigError("must be non-negative", "env.temperature_noise_sd");
    deterioration.validate();
    observation.validate();
    if (mc.n_p < 100) throw ConfigError("must be at least 100", "mc.n_p");
    filter.validate();
    if (!(filter.em.tolerance > 0.0)) throw ConfigError("must be positive", "filter.em_tolerance");
    if (!(filter.em.regularization >= 0.0)) throw ConfigError("must be non-negative", "filter.em_regularization");
    gumbel.validate();
    costs.validate();
    policy.validate();
    if (!(shm_dt_I >= 1.0)) throw ConfigError("must be at least 1 year or inf", "policy.shm_dt_I");
    if (case_number < 0 || case_number > 4) throw ConfigError("must be 0 (custom) or 1-4", "case.number");
    case_config.validate();
    if (mc.n_mcs < 2) throw ConfigError("must be at least 2", "mc.n_mcs");
    if (mc.workers < 1) throw ConfigError("must be at least 1", "mc.workers");
    if (!(mc.max_degenerate_fraction >= 0.0 && mc.max_degenerate_fraction <= 1.0)) {
        throw ConfigError("must lie in [0, 1]", "mc.max_degenerate_fraction");
    }
    if (!(optimize.p_min > 0.0)) throw ConfigError("must be positive", "optimize.p_min");
    if (!(optimize.p_max >= optimize.p_min)) throw ConfigError("must be at least p_min", "optimize.p_max");
    if (optimize.points < 1) throw ConfigError("must be at least 1", "optimize.points");
    if (output.dir.empty()) throw ConfigError("must not be empty", "output.dir");
}

RunConfig parse_config(const std::string& text, ConfigFormat format) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        if (format == ConfigFormat::json) {
            if (!trim(text).empty()) pt::read_json(in, tree);
        } else {
            pt::read_ini(in, tree);
        }
    } catch (const pt::file_parser_error& ex) {
        throw ConfigError(fmt::format("parse error at line {}: {}", ex.line(), ex.message()), "config");
    }
    return from_tree(tree);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read '{}'", path.string()), "config");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const ConfigFormat format = path.extension() == ".json" ? ConfigFormat::json : ConfigFormat::ini;
    return parse_config(buffer.str(), format);
}

std::string to_ini(const RunConfig& config) {
    RunConfig copy = config;
    const Schema schema = make_schema(copy);
    std::string out;
    for (const auto& [section, fields] : schema) {
        out += fmt::format("[{}]\n", section);
        for (const auto& [key, field] : fields) {
            out += fmt::format("{} = {}\n", key, field.get());
        }
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::json read_artifact(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw PrerequisiteError(fmt::format("{} '{}' not found", what, path));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
        throw PrerequisiteError(fmt::format("{} '{}' is not valid JSON: {}", what, path, ex.what()));
    }
}

}  // namespace

StudyContext build_context(const RunConfig& config) {
    config.validate();
    const auto model = std::make_shared<const BridgeModel>(config.bridge);
    StudyContext ctx;
    ctx.e0 = config.bridge.nominal_youngs_modulus;
    if (config.surrogate_path.empty()) {
        const SurrogateGrid grid = default_surrogate_grid(config.bridge);
        ctx.predictor = std::make_shared<const ModalSurrogate>(
            fit_surrogate(*model, grid.x, grid.e, config.bridge.n_modes, config.surrogate));
    } else {
        try {
            auto surrogate = ModalSurrogate::from_json(read_artifact(config.surrogate_path, "surrogate"));
            if (surrogate.n_modes() != config.bridge.n_modes) {
                throw PrerequisiteError(fmt::format("surrogate '{}' predicts {} modes, model.n_modes is {}",
                                                    config.surrogate_path, surrogate.n_modes(), config.bridge.n_modes));
            }
            ctx.predictor = std::make_shared<const ModalSurrogate>(std::move(surrogate));
        } catch (const FitError& ex) {
            throw PrerequisiteError(fmt::format("surrogate '{}': {}", config.surrogate_path, ex.what()));
        }
    }
    ctx.failure = std::make_shared<const FailureModel>(capacity_curve(*model, default_capacity_grid()), config.gumbel);
    ctx.deterioration = config.deterioration;
    ctx.env_prior = config.env_prior;
    ctx.temperature = config.temperature;
    ctx.env_learning = config.env_learning;
    ctx.observation = config.observation;
    ctx.filter = config.filter;
    ctx.costs = config.costs;
    if (!config.env_posterior_path.empty()) {
        const nlohmann::json doc = read_artifact(config.env_posterior_path, "environmental posterior");
        try {
            const EnvPosterior posterior = EnvPosterior::from_json(doc);
            ctx.env_learning.mode = EnvLearningMode::fixed;
            ctx.env_learning.fixed_estimate = posterior.mean;
            ctx.env_learning.fixed_truth = doc.contains("truth") ? env_params_from_json(doc.at("truth")) : posterior.mean;
        } catch (const InferenceError& ex) {
            throw PrerequisiteError(fmt::format("posterior '{}': {}", config.env_posterior_path, ex.what()));
        } catch (const nlohmann::json::exception& ex) {
            throw PrerequisiteError(fmt::format("posterior '{}': {}", config.env_posterior_path, ex.what()));
        }
    }
    return ctx;
}

std::vector<std::pair<std::string, std::vector<std::string>>> config_schema() {
    RunConfig c;
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    for (const auto& [section, fields] : make_schema(c)) {
        std::vector<std::string> keys;
        for (const auto& f : fields) keys.push_back(f.first);
        out.push_back({section, keys});
    }
    return out;
}

}  // namespace voshm
