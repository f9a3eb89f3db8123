// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 1 3 7      a subset
//
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "grid_filter.hpp"
#include "voshm/deterioration.hpp"
#include "voshm/environment.hpp"
#include "voshm/lifecycle.hpp"
#include "voshm/particle_filter.hpp"
#include "voshm/reliability.hpp"
#include "voshm/report.hpp"
#include "voshm/structural.hpp"
#include "voshm/surrogate.hpp"

using namespace voshm;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

const StudyContext& shared_context() {
    static const StudyContext ctx = make_default_context();
    return ctx;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

// 1 -------------------------------------------------------------------------
Outcome gumbel_calibration() {
    const double p = demand_exceedance(GumbelDemand{}, 1.0);
    return {p >= 0.95e-6 && p <= 1.05e-6, fmt::format("Pr(S > 1) = {:.4e}, required [0.95, 1.05]e-6", p)};
}

// 2 -------------------------------------------------------------------------
Outcome compound_poisson() {
    const DeteriorationParams params;
    const int draws = 1'000'000;

    const ShockIncrementCdf series(params, 1.0, 30);
    const double p0 = series(0.0);
    const double p0_exact = std::exp(-0.04);
    const bool ok_p0 = std::abs(p0 - p0_exact) < 1e-12 && std::abs(p0 - 0.9608) < 5e-5;

    Rng rng = make_rng(2, 0, StreamId::auxiliary);
    std::vector<double> increments(static_cast<std::size_t>(draws));
    double sum = 0.0;
    for (double& d : increments) {
        d = sample_shock_increment(1.0, params, rng);
        sum += d;
    }
    const double mean_increment = sum / draws;
    const bool ok_mean = within(mean_increment, 0.15, 0.01);

    // Jump counts over the 50-year horizon from the scenario sampler.
    Rng count_rng = make_rng(2, 1, StreamId::scenario);
    double jumps = 0.0;
    for (int i = 0; i < draws; ++i) jumps += static_cast<double>(sample_scenario(params, 50.0, count_rng).shocks.size());
    const double mean_jumps = jumps / draws;
    const bool ok_jumps = within(mean_jumps, 2.0, 0.01);

    std::sort(increments.begin(), increments.end());
    double gap = 0.0;
    for (double d = 0.0; d <= 20.0; d += 0.05) {
        const auto below = std::upper_bound(increments.begin(), increments.end(), d) - increments.begin();
        gap = std::max(gap, std::abs(series(d) - static_cast<double>(below) / draws));
    }
    const bool ok_gap = gap <= 2e-3;

    return {ok_p0 && ok_mean && ok_jumps && ok_gap,
            fmt::format("P(no jump) = {:.6f} (exp(-0.04) = {:.6f}); mean increment/yr = {:.5f}; jumps/50 yr = {:.4f}; "
                        "max CDF gap = {:.2e}",
                        p0, p0_exact, mean_increment, mean_jumps, gap)};
}

// 3 -------------------------------------------------------------------------
Outcome gradual_law() {
    DeteriorationParams params;
    params.omega_mean = 0.0;
    params.omega_sd = 0.0;
    params.shock_rate = 0.0;
    AugmentedState s{0.0, params.a.mean, params.b.mean, 0.0};
    Rng rng = make_rng(3, 0, StreamId::auxiliary);
    for (int k = 0; k < 50; ++k) s = transition_step(s, k, k + 1.0, params, rng, ShockKnowledge::none);
    const double target = params.a.mean * std::pow(50.0, params.b.mean);
    return {within(s.x, target, 0.005) && within(target, 0.485, 1e-3),
            fmt::format("x(50) = {:.6f}, A t^B = {:.6f}", s.x, target)};
}

// 4 -------------------------------------------------------------------------
Outcome environmental_learning() {
    const StudyContext& ctx = shared_context();
    const EnvPrior prior;
    const auto prior_sd = prior.sd();
    const int replicates = 20;
    std::array<int, EnvParams::dim> covered{};
    int shrunk = 0;
    double worst_rmse = 0.0;
    for (int r = 0; r < replicates; ++r) {
        Rng env_rng = make_rng(4, static_cast<std::uint64_t>(r), StreamId::environment);
        const EnvParams truth = prior.sample(env_rng);
        const UndamagedModalDataset data =
            synthesize_undamaged_dataset(truth, *ctx.predictor, ctx.e0, 50, 0.02, ctx.temperature, env_rng);
        Rng learn_rng = make_rng(4, static_cast<std::uint64_t>(r), StreamId::learning);
        const EnvPosterior post = learn_env_posterior(data, prior, *ctx.predictor, ctx.e0, 0.02, TmcmcSettings{}, learn_rng);
        const auto t = truth.to_array();
        const auto m = post.mean.to_array();
        bool all_shrunk = true;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (std::abs(m[i] - t[i]) <= 2.0 * post.sd[i]) ++covered[i];
            all_shrunk = all_shrunk && post.sd[i] < prior_sd[i];
        }
        if (all_shrunk) ++shrunk;
        double ss = 0.0;
        int n = 0;
        for (double temp = -15.0; temp <= 35.0; temp += 0.5, ++n) {
            const double exact = theta_of_temperature(truth, temp);
            const double rel = (theta_of_temperature(post.mean, temp) - exact) / exact;
            ss += rel * rel;
        }
        worst_rmse = std::max(worst_rmse, std::sqrt(ss / n));
    }
    const int min_covered = *std::min_element(covered.begin(), covered.end());
    const bool ok = min_covered >= 18 && shrunk == replicates && worst_rmse <= 0.01;
    return {ok, fmt::format("{} replicates: coverage within 2 sd per parameter [{}] (need >= 18); sd shrinks in {}/{}; "
                            "worst theta'' RMSE = {:.3f}%",
                            replicates, fmt::join(covered, ", "), shrunk, replicates, 100.0 * worst_rmse)};
}

// 5 -------------------------------------------------------------------------
Outcome filter_oracle() {
    DeteriorationParams params;
    params.shock_rate = 0.0;
    const ObservationSettings obs;
    const int seeds = 10, steps = 50, n_p = 2000;
    std::vector<double> mean_err(steps, 0.0), sd_err(steps, 0.0);
    for (int seed = 0; seed < seeds; ++seed) {
        Rng truth_rng = make_rng(5, static_cast<std::uint64_t>(seed), StreamId::scenario);
        Rng noise_rng = make_rng(5, static_cast<std::uint64_t>(seed), StreamId::inspection);
        Rng filter_rng = make_rng(5, static_cast<std::uint64_t>(seed), StreamId::filter);
        const double a = params.a.mean, b = params.b.mean;

        ParticleEnsemble ens = init_ensemble(params, n_p, filter_rng);
        for (auto& s : ens.states) {
            s.a = a;
            s.b = b;
        }
        testing::GridFilter grid(2000, params.omega_mean, params.omega_sd, obs.cv_insp, obs.sigma_floor);
        AugmentedState truth{0.0, a, b, 0.0};
        for (int k = 0; k < steps; ++k) {
            const double t0 = k, t1 = k + 1.0;
            truth = transition_step(truth, t0, t1, params, truth_rng, ShockKnowledge::none);
            const InspectionObservation z = sample_inspection(t1, truth.x, obs, noise_rng);

            predict(ens, t1, params, filter_rng, ShockKnowledge::none);
            update_inspection(ens, z, obs);
            grid.predict(gradual_increment(a, b, t0, t1, 0.0));
            grid.update(z.measured_state);

            mean_err[static_cast<std::size_t>(k)] += std::abs(ens.mean_x() - grid.mean()) / grid.mean() / seeds;
            sd_err[static_cast<std::size_t>(k)] += std::abs(ens.sd_x() - grid.sd()) / grid.sd() / seeds;
            if (ens.ess() < 0.5 * n_p) gm_resample(ens, 3, EmSettings{}, filter_rng);
        }
    }
    const double worst_mean = *std::max_element(mean_err.begin(), mean_err.end());
    const double worst_sd = *std::max_element(sd_err.begin(), sd_err.end());
    return {worst_mean <= 0.02 && worst_sd <= 0.05,
            fmt::format("{} particles vs 2000-point grid, {} steps x {} seeds: worst seed-averaged relative error "
                        "mean {:.2f}% (<= 2%), sd {:.2f}% (<= 5%)",
                        n_p, steps, seeds, 100.0 * worst_mean, 100.0 * worst_sd)};
}

// 6 -------------------------------------------------------------------------
Outcome surrogate_fidelity() {
    const BridgeConfig cfg;
    const BridgeModel model(cfg);
    const SurrogateGrid grid = default_surrogate_grid(cfg);
    const ModalSurrogate surrogate = fit_surrogate(model, grid.x, grid.e, cfg.n_modes);
    const double e_lo = grid.e.front(), e_hi = grid.e.back();
    Rng rng = make_rng(6, 0, StreamId::auxiliary);
    double worst = 0.0;
    const int points = 300;
    for (int i = 0; i < points; ++i) {
        // Uniform in u = 1/(1+x) covers x from 0 to the fully lost support.
        const double u = std::max(uniform01(rng), 1e-3);
        const double x = 1.0 / u - 1.0;
        const double e = e_lo * std::pow(e_hi / e_lo, uniform01(rng));
        const auto fe = model.modal_analysis(x, e).frequencies();
        const auto sg = surrogate.predict(x, e).frequencies();
        for (std::size_t m = 0; m < fe.size(); ++m) worst = std::max(worst, std::abs(sg[m] - fe[m]) / fe[m]);
    }
    return {worst <= 0.005, fmt::format("{} random held-out (x, E) points: max relative frequency error {:.3f}% (<= 0.5%)",
                                        points, 100.0 * worst)};
}

// 7 -------------------------------------------------------------------------
Outcome ledger_identities() {
    StudyContext ctx = shared_context();
    ctx.env_learning.mode = EnvLearningMode::truth;
    EpisodeScenario scenario = make_episode_scenario(ctx, 7, 0);
    auto& d = scenario.deterioration;
    d.a = 0.0;
    d.shocks.clear();
    d.times.clear();
    for (int y = 0; y <= 50; ++y) d.times.push_back(y);
    d.omega.assign(50, 0.0);
    d.temperatures.assign(51, 10.0);
    d.x = scenario_path(d);
    scenario.inspection_noise.resize(51);
    scenario.shm_noise.resize(51, scenario.shm_noise.front());

    // Thresholds that are never reached.
    const PolicyHeuristics w1{1.0, 1.0, 5.0};
    const PolicyHeuristics w2{1.0, 1.0, std::numeric_limits<double>::infinity()};
    const CaseStudyConfig case1 = CaseStudyConfig::preset(1);
    Rng r1 = make_rng(7, 0, StreamId::filter);
    const CostBreakdown insp = simulate_episode(scenario, ThetaCurve(scenario.env_truth), Mode::inspection_only, w1, case1, ctx, r1);
    Rng r2 = make_rng(7, 0, StreamId::filter);
    const CostBreakdown shm = simulate_episode(scenario, ThetaCurve(scenario.env_truth), Mode::shm, w2, case1, ctx, r2);

    double expected = 0.0;
    for (int j = 1; j <= 9; ++j) expected += 2e4 * std::pow(1.02, -5.0 * j);
    // Ledger re-derivation from the action log.
    double relog = 0.0;
    std::vector<double> times;
    for (const auto& a : insp.actions) {
        if (a.kind != ActionKind::inspection) continue;
        relog += ctx.costs.c_I * discount_factor(a.time, ctx.costs.r);
        times.push_back(a.time);
    }
    const double diff = insp.total() - shm.total();
    const bool ok = within(insp.inspection, expected, 1e-6) && within(expected, 1.133e5, 5e-4) && shm.inspection == 0.0 &&
                    insp.repair == 0.0 && shm.repair == 0.0 && within(diff, expected, 1e-6) &&
                    std::abs(relog - insp.inspection) <= 1e-10 * expected && times.size() == 9 && times.front() == 5.0 &&
                    times.back() == 45.0;
    return {ok, fmt::format("C_I(inspection-only) = {:.6e} (hand sum {:.6e}), inspections at [{}], C_I(SHM) = {}, "
                            "difference {:.6e}",
                            insp.inspection, expected, fmt::join(times, ", "), shm.inspection, diff)};
}

// 8 -------------------------------------------------------------------------
Outcome voshm_ordering() {
    StudyContext ctx = shared_context();
    ctx.filter.n_particles = 500;
    StudyOptions options;
    options.seed = 1;
    options.n_mcs = 200;
    options.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    ThetaCache cache;
    const double inf = std::numeric_limits<double>::infinity();
    const PolicyHeuristics w1{5e-4, 1e-3, 5.0}, w2{5e-4, 1e-3, inf};
    const PolicyHeuristics w1_case4{7e-6, 1e-5, 5.0}, w2_case4{7e-6, 1e-5, inf};

    std::array<PairedEstimate, 4> est;
    for (int c = 1; c <= 4; ++c) {
        const bool four = c == 4;
        est[static_cast<std::size_t>(c - 1)] = voshm_estimate(four ? w1_case4 : w1, four ? w2_case4 : w2,
                                                              CaseStudyConfig::preset(c), ctx, options, &cache);
    }
    const auto& v1 = est[0].difference;
    const auto& v2 = est[1].difference;
    const auto& v3 = est[2].difference;
    const auto& v4 = est[3].difference;
    const bool a = v1.mean > 2.0 * v1.se;
    const bool b = v2.mean > v1.mean;
    const bool c = v3.mean > 5.0 * v1.mean;
    const bool d = v4.mean < v1.mean;
    std::string detail = fmt::format("n_MCS = 200, n_p = 500, per-scenario learning; VoSHM case 1 = {:.3e} +/- {:.2e} [{}], "
                                     "case 2 = {:.3e} +/- {:.2e} [{}], case 3 = {:.3e} +/- {:.2e} [{}], "
                                     "case 4 = {:.3e} +/- {:.2e} [{}]",
                                     v1.mean, v1.se, a ? "> 2 se ok" : "NOT > 2 se", v2.mean, v2.se,
                                     b ? "> case 1 ok" : "NOT > case 1", v3.mean, v3.se, c ? "> 5x case 1 ok" : "NOT > 5x case 1",
                                     v4.mean, v4.se, d ? "< case 1 ok" : "NOT < case 1");
    std::size_t excluded = 0;
    for (const auto& e : est) excluded += e.excluded;
    detail += fmt::format("; degenerate episodes excluded: {}", excluded);
    return {a && b && c && d, detail};
}

// 9 -------------------------------------------------------------------------
Outcome determinism() {
    StudyContext ctx = shared_context();
    ctx.filter.n_particles = 200;
    StudyOptions options;
    options.seed = 9;
    options.n_mcs = 12;
    auto run = [&](int workers) {
        options.workers = workers;
        const PairedEstimate p = voshm_estimate(PolicyHeuristics{}, PolicyHeuristics{5e-4, 1e-3, std::numeric_limits<double>::infinity()},
                                                CaseStudyConfig::preset(3), ctx, options);
        std::vector<EpisodeRow> rows = p.baseline.rows;
        rows.insert(rows.end(), p.alternative.rows.begin(), p.alternative.rows.end());
        return episodes_csv(rows) + estimate_json(p.difference).dump();
    };
    const std::string one = run(1), two = run(1), four = run(4);
    return {one == two && one == four,
            fmt::format("case-3 VoSHM study (12 scenarios, per-scenario learning) serialized identically with 1, 1 and 4 "
                        "workers: {}",
                        one == two && one == four ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"Gumbel calibration", gumbel_calibration},
        {"compound Poisson increments", compound_poisson},
        {"gradual-law consistency", gradual_law},
        {"environmental learning", environmental_learning},
        {"filter vs grid oracle", filter_oracle},
        {"surrogate fidelity", surrogate_fidelity},
        {"episode ledger identities", ledger_identities},
        {"VoSHM ordering across cases", voshm_ordering},
        {"determinism across worker counts", determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = Clock::now();
        Outcome out;
        try {
            out = criteria[i].second();
        } catch (const std::exception& ex) {
            out = {false, fmt::format("exception: {}", ex.what())};
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
        if (!out.pass) ++failures;
        fmt::print("[{}] criterion {}: {} | {} | {:.1f} s\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first,
                   out.detail, seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
