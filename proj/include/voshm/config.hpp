#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "voshm/deterioration.hpp"
#include "voshm/environment.hpp"
#include "voshm/lifecycle.hpp"
#include "voshm/observation.hpp"
#include "voshm/particle_filter.hpp"
#include "voshm/reliability.hpp"
#include "voshm/structural.hpp"
#include "voshm/surrogate.hpp"

namespace voshm {

struct McSettings {
    int n_mcs = 1000;
    int n_p = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    double max_degenerate_fraction = 0.05;
};

struct OptimizeSettings {
    double p_min = 1e-6;
    double p_max = 1e-2;
    int points = 7;
    bool search_shm = false;  // inspection-only runs also search the SHM branch
};

struct OutputSettings {
    std::string dir = "out";
    std::vector<std::uint64_t> traces;  // scenario indices whose traces are written
};

/// Fully resolved run configuration. Defaults are the reference values.
struct RunConfig {
    BridgeConfig bridge;
    SurrogateSettings surrogate;
    std::string surrogate_path;  // empty: fit in-process

    EnvPrior env_prior;
    TemperatureModel temperature;
    EnvLearningSettings env_learning;
    std::string env_posterior_path;  // non-empty: learning mode "fixed" from this file

    DeteriorationParams deterioration;
    ObservationSettings observation;
    FilterSettings filter;
    GumbelDemand gumbel;
    CostConstants costs;

    PolicyHeuristics policy;
    double shm_dt_I = std::numeric_limits<double>::infinity();
    Mode mode = Mode::inspection_only;
    int case_number = 1;  // 0: custom
    CaseStudyConfig case_config;

    McSettings mc;
    OptimizeSettings optimize;
    OutputSettings output;

    /// SHM-branch policy: the same thresholds with its own periodic interval.
    PolicyHeuristics shm_policy() const { return {policy.p_th_I, policy.p_th_R, shm_dt_I}; }
    StudyOptions study_options() const;

    /// Throws ConfigError with the key path of the first violation.
    void validate() const;
    /// Re-applies the case preset; explicit case keys are lost.
    void set_case(int number);
};

enum class ConfigFormat { ini, json };

/// Parses a document; unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text, ConfigFormat format);
/// Format from the extension (.json, anything else is INI). Missing file: ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Resolved configuration as INI text; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& config);

/// Study context of a configuration: FE model, surrogate (fitted, or loaded
/// from model.surrogate), capacity curve and, with env.posterior, the stored
/// environmental estimate. Missing or unusable artifacts: PrerequisiteError.
StudyContext build_context(const RunConfig& config);

/// Keys accepted in each section, in echo order.
std::vector<std::pair<std::string, std::vector<std::string>>> config_schema();

}  // namespace voshm
