#include "voshm/lifecycle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

bool is_whole_year(double t) { return std::abs(t - std::round(t)) < 1e-12; }

double expected_failure_rate(const ParticleEnsemble& ensemble, const FailureModel& failure) {
    double p = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        p += ensemble.weights[j] * failure.interval_probability(ensemble.states[j].x, 1.0);
    }
    return p;
}

void append_action(std::string& actions, const char* label) {
    if (!actions.empty()) actions += '+';
    actions += label;
}

}  // namespace

void PolicyHeuristics::validate() const {
    if (!(p_th_I > 0.0)) throw ConfigError("must be positive", "policy.p_th_I");
    if (!(p_th_R > 0.0)) throw ConfigError("must be positive", "policy.p_th_R");
    if (!(delta_t_I >= 1.0)) throw ConfigError("must be at least 1 year or inf", "policy.dt_I");
}

bool PolicyHeuristics::periodic_inspection_at(double t) const {
    if (std::isinf(delta_t_I) || t <= 0.0) return false;
    const double ratio = t / delta_t_I;
    return std::abs(ratio - std::round(ratio)) < 1e-9;
}

Mode parse_mode(const std::string& name) {
    if (name == "inspection-only") return Mode::inspection_only;
    if (name == "shm" || name == "shm-plus-inspection") return Mode::shm;
    if (name == "prior") return Mode::prior;
    throw ConfigError(fmt::format("unknown mode '{}' (inspection-only, shm, prior)", name), "case.mode");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::inspection_only: return "inspection-only";
        case Mode::shm: return "shm";
        case Mode::prior: return "prior";
    }
    return "?";
}

CaseStudyConfig CaseStudyConfig::preset(int number) {
    CaseStudyConfig c;
    switch (number) {
        case 1: break;
        case 2: c.shocks = ShockObservability::unobserved; break;
        case 3: c.closedown = true; break;
        case 4: c.imposed_repair_threshold = 1e-5; break;
        default: throw ConfigError(fmt::format("case must be 1-4, got {}", number), "case");
    }
    return c;
}

void CaseStudyConfig::validate() const {
    if (closedown && shocks == ShockObservability::unobserved) {
        throw ConfigError("close-down decisions need observed shocks", "case.closedown");
    }
    if (!(delay_days >= 0.0)) throw ConfigError("must be non-negative", "costs.delay_days");
    if (imposed_repair_threshold && !(*imposed_repair_threshold > 0.0)) {
        throw ConfigError("must be positive", "case.imposed_repair_threshold");
    }
}

void CostConstants::validate() const {
    const std::pair<double, const char*> fields[] = {
        {c_F, "costs.c_F"}, {c_I, "costs.c_I"}, {c_R, "costs.c_R"}, {r, "costs.r"}, {c_clsdn, "costs.c_clsdn"}};
    for (const auto& [value, key] : fields) {
        if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("must be finite and non-negative", key);
    }
}

double discount_factor(double t_years, double r) {
    if (!(t_years >= 0.0)) throw DomainError("time must be non-negative");
    return std::pow(1.0 + r, -t_years);
}

std::string to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::inspection: return "inspection";
        case ActionKind::repair: return "repair";
        case ActionKind::closedown: return "closedown";
        case ActionKind::shock: return "shock";
    }
    return "?";
}

int CostBreakdown::count(ActionKind kind) const {
    return static_cast<int>(std::count_if(actions.begin(), actions.end(), [&](const ActionRecord& a) { return a.kind == kind; }));
}

EnvLearningMode parse_env_learning_mode(const std::string& name) {
    if (name == "per-scenario") return EnvLearningMode::per_scenario;
    if (name == "shared") return EnvLearningMode::shared;
    if (name == "truth") return EnvLearningMode::truth;
    if (name == "fixed") return EnvLearningMode::fixed;
    throw ConfigError(fmt::format("unknown mode '{}' (per-scenario, shared, truth, fixed)", name), "env.learning");
}

std::string to_string(EnvLearningMode mode) {
    switch (mode) {
        case EnvLearningMode::per_scenario: return "per-scenario";
        case EnvLearningMode::shared: return "shared";
        case EnvLearningMode::truth: return "truth";
        case EnvLearningMode::fixed: return "fixed";
    }
    return "?";
}

StudyContext make_default_context(const BridgeConfig& bridge, int n_modes) {
    bridge.validate();
    const auto model = std::make_shared<const BridgeModel>(bridge);
    const SurrogateGrid grid = default_surrogate_grid(bridge);
    StudyContext ctx;
    ctx.e0 = bridge.nominal_youngs_modulus;
    ctx.predictor = std::make_shared<const ModalSurrogate>(fit_surrogate(*model, grid.x, grid.e, n_modes));
    ctx.failure = std::make_shared<const FailureModel>(capacity_curve(*model, default_capacity_grid()), GumbelDemand{});
    return ctx;
}

EpisodeScenario make_episode_scenario(const StudyContext& ctx, std::uint64_t seed, std::uint64_t index) {
    Rng scenario_rng = make_rng(seed, index, StreamId::scenario);
    return episode_from_deterioration(
        ctx, sample_scenario(ctx.deterioration, ctx.deterioration.horizon_years, scenario_rng, ctx.temperature), seed,
        index);
}

EpisodeScenario episode_from_deterioration(const StudyContext& ctx, DeteriorationScenario deterioration,
                                           std::uint64_t seed, std::uint64_t index) {
    EpisodeScenario s;
    s.seed = seed;
    s.index = index;
    s.deterioration = std::move(deterioration);

    const std::uint64_t env_index = ctx.env_learning.mode == EnvLearningMode::shared ? 0 : index;
    Rng env_rng = make_rng(seed, env_index, StreamId::environment);
    s.env_truth = ctx.env_learning.mode == EnvLearningMode::fixed ? ctx.env_learning.fixed_truth
                                                                  : ctx.env_prior.sample(env_rng);

    const std::size_t points = s.deterioration.times.size();
    Rng insp_rng = make_rng(seed, index, StreamId::inspection);
    s.inspection_noise.resize(points);
    for (double& v : s.inspection_noise) v = standard_normal(insp_rng);
    Rng shm_rng = make_rng(seed, index, StreamId::shm);
    s.shm_noise.reserve(points);
    for (std::size_t k = 0; k < points; ++k) s.shm_noise.push_back(ShmNoise::sample(ctx.predictor->n_modes(), shm_rng));
    return s;
}

ThetaCurve learn_scenario_theta(const StudyContext& ctx, const EpisodeScenario& scenario) {
    if (ctx.env_learning.mode == EnvLearningMode::truth) return ThetaCurve(scenario.env_truth);
    if (ctx.env_learning.mode == EnvLearningMode::fixed) return ThetaCurve(ctx.env_learning.fixed_estimate);
    const std::uint64_t index = ctx.env_learning.mode == EnvLearningMode::shared ? 0 : scenario.index;
    Rng data_rng = make_rng(scenario.seed, index, StreamId::environment);
    ctx.env_prior.sample(data_rng);  // the truth draw, already in scenario.env_truth
    const UndamagedModalDataset data =
        synthesize_undamaged_dataset(scenario.env_truth, *ctx.predictor, ctx.e0, ctx.env_learning.n_t,
                                     ctx.observation.c_lambda, ctx.temperature, data_rng);
    Rng learn_rng = make_rng(scenario.seed, index, StreamId::learning);
    const EnvPosterior posterior = learn_env_posterior(data, ctx.env_prior, *ctx.predictor, ctx.e0,
                                                       ctx.observation.c_lambda, ctx.env_learning.tmcmc, learn_rng);
    return posterior_theta_curve(posterior);
}

ThetaCurve ThetaCache::get(const StudyContext& ctx, const EpisodeScenario& scenario) {
    const std::uint64_t index = ctx.env_learning.mode == EnvLearningMode::shared ? 0 : scenario.index;
    std::shared_ptr<Entry> entry;
    {
        std::lock_guard lock(mutex_);
        auto& slot = entries_[{scenario.seed, index}];
        if (!slot) slot = std::make_shared<Entry>();
        entry = slot;
    }
    std::call_once(entry->once, [&] { entry->curve = learn_scenario_theta(ctx, scenario); });
    return entry->curve;
}

std::size_t ThetaCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

CostBreakdown simulate_episode(const EpisodeScenario& scenario, const ThetaCurve& theta_pp, Mode mode,
                               const PolicyHeuristics& policy, const CaseStudyConfig& case_config,
                               const StudyContext& ctx, Rng& filter_rng, const EpisodeOptions& options) {
    policy.validate();
    case_config.validate();
    const auto& sc = scenario.deterioration;
    const auto& costs = ctx.costs;
    const FailureModel& failure = *ctx.failure;
    const bool shocks_known = case_config.shocks == ShockObservability::observed && mode != Mode::prior;
    const double p_R = case_config.imposed_repair_threshold.value_or(policy.p_th_R);
    const std::size_t last = sc.times.size() - 1;

    std::vector<std::size_t> epochs;
    for (std::size_t k = 0; k <= last; ++k) {
        if (k == 0 || k == last || is_whole_year(sc.times[k]) || (shocks_known && sc.is_shock_time(k))) {
            epochs.push_back(k);
        }
    }

    CostBreakdown out;
    for (const auto& s : sc.shocks) out.actions.push_back({s.time, ActionKind::shock, 0.0, s.magnitude});

    AugmentedState truth{0.0, sc.a, sc.b, 0.0};
    double truth_log_survival = 0.0;
    ParticleEnsemble ensemble = init_ensemble(ctx.deterioration, ctx.filter.n_particles, filter_rng);
    const double resample_below = ctx.filter.ess_threshold * static_cast<double>(ctx.filter.n_particles);

    auto maybe_resample = [&](ParticleEnsemble& e) {
        if (e.ess() >= resample_below) return false;
        const ResampleOutcome r = gm_resample(e, ctx.filter.max_components, ctx.filter.em, filter_rng);
        ++out.resamples;
        if (r.fallback) ++out.resample_fallbacks;
        return true;
    };

    try {
        for (std::size_t e = 0; e + 1 < epochs.size(); ++e) {
            const std::size_t k_now = epochs[e];
            const std::size_t k_next = epochs[e + 1];
            const double t = sc.times[k_now];
            const double t_next = sc.times[k_next];
            const double gamma = discount_factor(t, costs.r);
            // Decisions at t cannot know whether a shock will hit before t_next. With
            // observed shocks a jump opens its own epoch, so the decision hazard is
            // the no-jump one; the filter later conditions on what happened.
            ShockKnowledge decision_knowledge = ShockKnowledge::unknown;
            ShockKnowledge actual_knowledge = ShockKnowledge::unknown;
            if (shocks_known) {
                decision_knowledge = ShockKnowledge::none;
                actual_knowledge = sc.shock_sum(t, t_next) > 0.0 ? ShockKnowledge::occurred : ShockKnowledge::none;
            }
            std::string actions;
            bool resampled = false;

            ParticleEnsemble current = ensemble;
            auto predicted = [&](ShockKnowledge knowledge) {
                ParticleEnsemble next = current;
                predict(next, t_next, ctx.deterioration, filter_rng, knowledge, &failure);
                return next;
            };
            auto hazard_of = [&](const ParticleEnsemble& e) {
                return annualized_hazard(predictive_reliability(e, ctx.filter.hazard_convention).hazard, t_next - t);
            };

            ensemble = predicted(decision_knowledge);
            double hazard = hazard_of(ensemble);
            const bool shock_now = shocks_known && k_now > 0 && sc.is_shock_time(k_now);

            if (shock_now && case_config.closedown) {
                const bool close = mode != Mode::shm || expected_failure_rate(current, failure) > policy.p_th_I;
                if (close) {
                    const double cost = costs.c_clsdn * case_config.delay_days * gamma;
                    out.closedown += cost;
                    out.actions.push_back({t, ActionKind::closedown, cost, case_config.delay_days});
                    append_action(actions, "closedown");
                }
            }

            if (hazard > p_R) {
                out.repair += costs.c_R * gamma;
                out.actions.push_back({t, ActionKind::repair, costs.c_R * gamma, truth.x});
                append_action(actions, "repair");
                truth.x = 0.0;
                truth.time_since_repair = 0.0;
                reset_after_repair(current);
                ensemble = predicted(decision_knowledge);
                hazard = hazard_of(ensemble);
            } else if (mode != Mode::prior &&
                       (hazard > policy.p_th_I || policy.periodic_inspection_at(t) || shock_now)) {
                const InspectionObservation z =
                    inspection_from_noise(t, truth.x, ctx.observation, scenario.inspection_noise[k_now]);
                out.inspection += costs.c_I * gamma;
                out.actions.push_back({t, ActionKind::inspection, costs.c_I * gamma, z.measured_state});
                append_action(actions, "inspection");
                if (options.record_trace) out.inspection_log.push_back(z);
                update_inspection(current, z, ctx.observation);
                resampled = maybe_resample(current);
                ensemble = predicted(decision_knowledge);
            }
            if (actual_knowledge != decision_knowledge) ensemble = predicted(actual_knowledge);

            for (std::size_t k = k_now; k < k_next; ++k) {
                truth = scenario_step(sc, k, truth);
                const double p = failure.interval_probability(truth.x, sc.times[k + 1] - sc.times[k]);
                const double survival = std::exp(truth_log_survival);
                const double risk = costs.c_F * discount_factor(sc.times[k + 1], costs.r) * survival * p;
                out.risk += risk;
                if (options.record_trace) out.truth.push_back({sc.times[k + 1], truth.x, p, survival, risk});
                truth_log_survival += std::log1p(-p);
            }

            if (mode == Mode::shm && k_next < last) {
                const ShmObservation obs =
                    shm_observation_from_noise(t_next, truth.x, sc.temperatures[k_next], scenario.env_truth,
                                               *ctx.predictor, ctx.e0, ctx.observation, scenario.shm_noise[k_next]);
                if (options.record_trace) out.shm_log.push_back(obs);
                update_shm(ensemble, obs, theta_pp, *ctx.predictor, ctx.e0, ctx.observation.c_lambda);
            }
            resampled = maybe_resample(ensemble) || resampled;

            if (options.record_trace) {
                FilterTraceRow row = trace_row(ensemble);
                row.resampled = resampled;
                row.hazard = hazard;
                row.true_x = truth.x;
                row.actions = actions;
                out.trace.push_back(std::move(row));
            }
        }
    } catch (const FilterDegeneracy& ex) {
        out.degenerate = true;
        out.degenerate_reason = ex.what();
    }
    std::sort(out.actions.begin(), out.actions.end(),
              [](const ActionRecord& a, const ActionRecord& b) { return a.time < b.time; });
    return out;
}

Estimate estimate_of(const std::vector<double>& values) {
    Estimate e;
    e.n = values.size();
    if (e.n == 0) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / static_cast<double>(e.n);
    if (e.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.se = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    }
    return e;
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task) {
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(threads, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct BranchSpec {
    Mode mode;
    PolicyHeuristics policy;
    std::string name;
};

CostEstimate summarize(std::vector<EpisodeRow> rows, double max_degenerate_fraction) {
    CostEstimate est;
    std::vector<double> ins, rep, clo, risk, tot;
    for (const auto& r : rows) {
        if (r.degenerate) {
            ++est.degenerate;
            continue;
        }
        ins.push_back(r.inspection);
        rep.push_back(r.repair);
        clo.push_back(r.closedown);
        risk.push_back(r.risk);
        tot.push_back(r.total);
    }
    if (!rows.empty() && static_cast<double>(est.degenerate) > max_degenerate_fraction * static_cast<double>(rows.size())) {
        throw EstimationError(fmt::format("{} of {} episodes degenerated", est.degenerate, rows.size()));
    }
    est.inspection = estimate_of(ins);
    est.repair = estimate_of(rep);
    est.closedown = estimate_of(clo);
    est.risk = estimate_of(risk);
    est.total = estimate_of(tot);
    est.rows = std::move(rows);
    return est;
}

EpisodeRow row_of(std::uint64_t index, const std::string& branch, const CostBreakdown& c) {
    return {index, branch, c.inspection, c.repair, c.closedown, c.risk, c.total(), c.degenerate};
}

// Runs several branches on every scenario, sequentially within one task.
std::vector<std::vector<EpisodeRow>> run_branches(const std::vector<BranchSpec>& branches,
                                                  const CaseStudyConfig& case_config, const StudyContext& ctx,
                                                  const StudyOptions& options, ThetaCache* cache) {
    if (options.n_mcs < 1) throw DomainError("n_mcs must be positive");
    const auto n = static_cast<std::size_t>(options.n_mcs);
    std::vector<std::vector<EpisodeRow>> rows(branches.size(), std::vector<EpisodeRow>(n));
    ThetaCache local;
    ThetaCache& thetas = cache != nullptr ? *cache : local;
    const bool needs_theta = std::any_of(branches.begin(), branches.end(), [](const BranchSpec& b) { return b.mode == Mode::shm; });
    parallel_for(n, options.workers, [&](std::size_t i) {
        const EpisodeScenario scenario = make_episode_scenario(ctx, options.seed, i);
        const ThetaCurve theta = needs_theta ? thetas.get(ctx, scenario) : ThetaCurve(scenario.env_truth);
        for (std::size_t b = 0; b < branches.size(); ++b) {
            Rng filter_rng = make_rng(options.seed, i, StreamId::filter);
            const CostBreakdown c =
                simulate_episode(scenario, theta, branches[b].mode, branches[b].policy, case_config, ctx, filter_rng);
            rows[b][i] = row_of(i, branches[b].name, c);
        }
    });
    return rows;
}

PairedEstimate paired(std::vector<std::vector<EpisodeRow>> rows, const StudyOptions& options) {
    PairedEstimate out;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
        if (rows[0][i].degenerate || rows[1][i].degenerate) {
            ++out.excluded;
            continue;
        }
        out.differences.push_back(rows[0][i].total - rows[1][i].total);
    }
    out.difference = estimate_of(out.differences);
    out.baseline = summarize(std::move(rows[0]), options.max_degenerate_fraction);
    out.alternative = summarize(std::move(rows[1]), options.max_degenerate_fraction);
    return out;
}

}  // namespace

CostEstimate expected_cost(Mode mode, const PolicyHeuristics& policy, const CaseStudyConfig& case_config,
                           const StudyContext& ctx, const StudyOptions& options, ThetaCache* cache) {
    auto rows = run_branches({{mode, policy, to_string(mode)}}, case_config, ctx, options, cache);
    return summarize(std::move(rows[0]), options.max_degenerate_fraction);
}

PairedEstimate voshm_estimate(const PolicyHeuristics& policy_inspection, const PolicyHeuristics& policy_shm,
                              const CaseStudyConfig& case_config, const StudyContext& ctx,
                              const StudyOptions& options, ThetaCache* cache) {
    return paired(run_branches({{Mode::inspection_only, policy_inspection, "inspection-only"},
                                {Mode::shm, policy_shm, "shm"}},
                               case_config, ctx, options, cache),
                  options);
}

PairedEstimate voi_estimate(const PolicyHeuristics& policy_prior, const PolicyHeuristics& policy_posterior,
                            Mode posterior_mode, const CaseStudyConfig& case_config, const StudyContext& ctx,
                            const StudyOptions& options, ThetaCache* cache) {
    return paired(run_branches({{Mode::prior, policy_prior, "prior"},
                                {posterior_mode, policy_posterior, to_string(posterior_mode)}},
                               case_config, ctx, options, cache),
                  options);
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw DomainError("log grid needs 0 < lo <= hi and n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        g[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    }
    return g;
}

OptimizationResult optimize_heuristics(Mode mode, const std::vector<double>& p_I_grid,
                                       const std::vector<double>& p_R_grid, double delta_t_I,
                                       const CaseStudyConfig& case_config, const StudyContext& ctx,
                                       const StudyOptions& options, ThetaCache* cache) {
    if (p_I_grid.empty()) throw DomainError("inspection threshold grid is empty");
    std::vector<double> repair_values = p_R_grid;
    if (case_config.imposed_repair_threshold) repair_values = {*case_config.imposed_repair_threshold};
    if (repair_values.empty()) throw DomainError("repair threshold grid is empty");

    std::vector<BranchSpec> branches;
    for (double p_R : repair_values) {
        for (double p_I : p_I_grid) {
            PolicyHeuristics w{p_I, p_R, delta_t_I};
            w.validate();
            branches.push_back({mode, w, fmt::format("{:.3e}/{:.3e}", p_I, p_R)});
        }
    }
    auto rows = run_branches(branches, case_config, ctx, options, cache);

    OptimizationResult result;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < branches.size(); ++b) {
        const CostEstimate est = summarize(std::move(rows[b]), options.max_degenerate_fraction);
        result.surface.push_back({branches[b].policy, est.total, est.degenerate});
        if (est.total.mean < best) {
            best = est.total.mean;
            result.best = branches[b].policy;
            result.best_total = est.total;
        }
    }
    return result;
}

}  // namespace voshm
