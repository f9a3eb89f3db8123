#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "voshm/deterioration.hpp"
#include "voshm/environment.hpp"
#include "voshm/observation.hpp"
#include "voshm/particle_filter.hpp"
#include "voshm/reliability.hpp"
#include "voshm/surrogate.hpp"

namespace voshm {

/// w = [p_th_I, dt_I, p_th_R]. Thresholds apply to the annualized one-step-ahead hazard.
struct PolicyHeuristics {
    double p_th_I = 5e-4;
    double p_th_R = 1e-3;
    double delta_t_I = 5.0;  // years, +inf disables periodic inspections

    void validate() const;
    /// True when p_th_I > p_th_R (allowed, but inspections can then never be hazard-triggered).
    bool thresholds_inverted() const { return p_th_I > p_th_R; }
    bool periodic_inspection_at(double t) const;
};

enum class Mode {
    inspection_only,
    shm,    // SHM plus inspections
    prior,  // no data at all; repairs from the prior predictive hazard
};

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

enum class ShockObservability { observed, unobserved };

struct CaseStudyConfig {
    ShockObservability shocks = ShockObservability::observed;
    bool closedown = false;
    double delay_days = 7.0;
    std::optional<double> imposed_repair_threshold;

    /// Case studies 1-4.
    static CaseStudyConfig preset(int number);
    void validate() const;
};

struct CostConstants {
    double c_F = 5e7;        // failure
    double c_I = 2e4;        // inspection
    double c_R = 6e5;        // repair
    double r = 0.02;         // annual discount rate
    double c_clsdn = 1.5e5;  // close-down per day

    void validate() const;
};

/// (1 + r)^-t.
double discount_factor(double t_years, double r);

enum class ActionKind { inspection, repair, closedown, shock };

std::string to_string(ActionKind kind);

struct ActionRecord {
    double time = 0.0;
    ActionKind kind = ActionKind::inspection;
    double discounted_cost = 0.0;
    double value = 0.0;  // measured state for inspections, magnitude for shocks
};

/// Ground-truth interval of the episode and its discounted risk contribution.
struct TruthInterval {
    double time = 0.0;  // end of the interval
    double x = 0.0;
    double interval_prob = 0.0;
    double survival_before = 1.0;
    double discounted_risk = 0.0;
};

struct CostBreakdown {
    double inspection = 0.0;
    double repair = 0.0;
    double closedown = 0.0;
    double risk = 0.0;
    std::vector<ActionRecord> actions;
    std::vector<TruthInterval> truth;
    std::vector<FilterTraceRow> trace;
    std::vector<ShmObservation> shm_log;
    std::vector<InspectionObservation> inspection_log;
    int resamples = 0;
    int resample_fallbacks = 0;
    bool degenerate = false;
    std::string degenerate_reason;

    double total() const { return inspection + repair + closedown + risk; }
    int count(ActionKind kind) const;
};

/// How the posterior-mean temperature curve of each scenario is obtained.
enum class EnvLearningMode {
    per_scenario,  // own truth, own dataset, own posterior per scenario
    shared,        // one truth and one posterior for all scenarios
    truth,         // no learning: the true curve is used
    fixed,         // one given truth and one given estimate (e.g. a stored posterior)
};

EnvLearningMode parse_env_learning_mode(const std::string& name);
std::string to_string(EnvLearningMode mode);

struct EnvLearningSettings {
    EnvLearningMode mode = EnvLearningMode::per_scenario;
    int n_t = 50;
    TmcmcSettings tmcmc;
    // Used by EnvLearningMode::fixed only.
    EnvParams fixed_truth;
    EnvParams fixed_estimate;
};

/// Everything shared by the episodes of a study. Immutable once built.
struct StudyContext {
    double e0 = 29.11e9;
    std::shared_ptr<const ModalPredictor> predictor;
    std::shared_ptr<const FailureModel> failure;
    DeteriorationParams deterioration;
    EnvPrior env_prior;
    TemperatureModel temperature;
    EnvLearningSettings env_learning;
    ObservationSettings observation;
    FilterSettings filter;
    CostConstants costs;
};

/// Builds the FE model, fits the surrogate and derives the capacity curve.
StudyContext make_default_context(const BridgeConfig& bridge = {}, int n_modes = 5);

/// The random inputs of one Monte Carlo scenario, shared by all branches.
struct EpisodeScenario {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    DeteriorationScenario deterioration;
    EnvParams env_truth;
    std::vector<double> inspection_noise;  // one standard normal per grid point
    std::vector<ShmNoise> shm_noise;       // one set per grid point
};

EpisodeScenario make_episode_scenario(const StudyContext& ctx, std::uint64_t seed, std::uint64_t index);

/// Episode around a given deterioration path (e.g. a stored scenario); the
/// environmental truth and the measurement noise come from (seed, index).
EpisodeScenario episode_from_deterioration(const StudyContext& ctx, DeteriorationScenario deterioration,
                                           std::uint64_t seed, std::uint64_t index);

/// Thread-safe cache of learned temperature curves keyed by (seed, index).
class ThetaCache {
public:
    ThetaCurve get(const StudyContext& ctx, const EpisodeScenario& scenario);
    std::size_t size() const;

private:
    struct Entry {
        std::once_flag once;
        ThetaCurve curve;
    };
    mutable std::mutex mutex_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::shared_ptr<Entry>> entries_;
};

/// Posterior-mean curve of one scenario, learned from a synthesized undamaged dataset.
ThetaCurve learn_scenario_theta(const StudyContext& ctx, const EpisodeScenario& scenario);

struct EpisodeOptions {
    bool record_trace = false;
};

/// Runs the sequential decision loop of one branch on one scenario.
/// A filter degeneracy ends the episode with `degenerate` set.
CostBreakdown simulate_episode(const EpisodeScenario& scenario, const ThetaCurve& theta_pp, Mode mode,
                               const PolicyHeuristics& policy, const CaseStudyConfig& case_config,
                               const StudyContext& ctx, Rng& filter_rng, const EpisodeOptions& options = {});

/// Mean and standard error of a sample.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

Estimate estimate_of(const std::vector<double>& values);

struct EpisodeRow {
    std::uint64_t scenario = 0;
    std::string branch;
    double inspection = 0.0;
    double repair = 0.0;
    double closedown = 0.0;
    double risk = 0.0;
    double total = 0.0;
    bool degenerate = false;
};

struct CostEstimate {
    Estimate inspection, repair, closedown, risk, total;
    std::size_t degenerate = 0;
    std::vector<EpisodeRow> rows;
};

struct StudyOptions {
    std::uint64_t seed = 1;
    int n_mcs = 1000;
    int workers = 1;
    /// Degenerate-episode share above which an estimate is refused.
    double max_degenerate_fraction = 0.05;
};

/// Runs `task(index)` for index in [0, n) on a pool of workers.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

CostEstimate expected_cost(Mode mode, const PolicyHeuristics& policy, const CaseStudyConfig& case_config,
                           const StudyContext& ctx, const StudyOptions& options, ThetaCache* cache = nullptr);

struct PairedEstimate {
    CostEstimate baseline;    // inspection-only branch (VoSHM) or prior branch (VoI)
    CostEstimate alternative; // SHM branch (VoSHM) or data branch (VoI)
    Estimate difference;      // baseline - alternative, paired per scenario
    std::vector<double> differences;
    std::size_t excluded = 0;
};

/// VoSHM = E[C(inspection-only, w1)] - E[C(SHM, w2)] on common scenarios.
PairedEstimate voshm_estimate(const PolicyHeuristics& policy_inspection, const PolicyHeuristics& policy_shm,
                              const CaseStudyConfig& case_config, const StudyContext& ctx,
                              const StudyOptions& options, ThetaCache* cache = nullptr);

/// VoI = E[C(prior, w0)] - E[C(mode, w)] on common scenarios.
PairedEstimate voi_estimate(const PolicyHeuristics& policy_prior, const PolicyHeuristics& policy_posterior,
                            Mode posterior_mode, const CaseStudyConfig& case_config, const StudyContext& ctx,
                            const StudyOptions& options, ThetaCache* cache = nullptr);

struct GridPoint {
    PolicyHeuristics policy;
    Estimate total;
    std::size_t degenerate = 0;
};

struct OptimizationResult {
    PolicyHeuristics best;
    Estimate best_total;
    std::vector<GridPoint> surface;
};

/// n log-spaced values over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int n);

/// Exhaustive search with common random numbers. With an imposed repair
/// threshold only the inspection threshold is searched.
OptimizationResult optimize_heuristics(Mode mode, const std::vector<double>& p_I_grid,
                                       const std::vector<double>& p_R_grid, double delta_t_I,
                                       const CaseStudyConfig& case_config, const StudyContext& ctx,
                                       const StudyOptions& options, ThetaCache* cache = nullptr);

}  // namespace voshm
