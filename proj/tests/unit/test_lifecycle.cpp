#include <cmath>
#include <limits>

#include "doctest.h"

#include "voshm/errors.hpp"
#include "voshm/lifecycle.hpp"

using namespace voshm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

StudyContext small_context() {
    static const StudyContext base = make_default_context();
    StudyContext ctx = base;
    ctx.env_learning.mode = EnvLearningMode::truth;
    ctx.filter.n_particles = 200;
    return ctx;
}

StudyOptions small_study(int n) {
    StudyOptions o;
    o.seed = 3;
    o.n_mcs = n;
    return o;
}

/// Scenario with no gradual deterioration and one shock at year 10.
EpisodeScenario shock_scenario(const StudyContext& ctx, double horizon) {
    EpisodeScenario s = make_episode_scenario(ctx, 9, 0);
    auto& d = s.deterioration;
    d.a = 1e-6;
    d.horizon = horizon;
    d.shocks = {ShockEvent{10.0, 4.0}};
    d.times.clear();
    for (int y = 0; y <= static_cast<int>(horizon); ++y) d.times.push_back(y);
    const std::size_t n = d.times.size();
    d.omega.assign(n - 1, 0.0);
    d.temperatures.assign(n, 10.0);
    d.x = scenario_path(d);
    s.inspection_noise.assign(n, 0.0);
    s.shm_noise.resize(n, s.shm_noise.front());
    return s;
}

}  // namespace

TEST_CASE("discount factor") {
    CHECK(discount_factor(0.0, 0.02) == 1.0);
    CHECK(discount_factor(50.0, 0.02) == doctest::Approx(0.3715).epsilon(1e-4));
}

TEST_CASE("policy and case validation") {
    CHECK_THROWS_AS((PolicyHeuristics{-1.0, 1e-3, 5.0}.validate()), ConfigError);
    CHECK_NOTHROW((PolicyHeuristics{1e-3, 1e-4, 5.0}.validate()));
    CHECK(PolicyHeuristics{1e-3, 1e-4, 5.0}.thresholds_inverted());
    CHECK(PolicyHeuristics{1.0, 1.0, 5.0}.periodic_inspection_at(10.0));
    CHECK_FALSE(PolicyHeuristics{1.0, 1.0, kInf}.periodic_inspection_at(10.0));
    CostConstants c;
    c.c_R = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_mode("shm") == Mode::shm);
    CHECK_THROWS_AS(parse_mode("nonsense"), ConfigError);
    CHECK(CaseStudyConfig::preset(2).shocks == ShockObservability::unobserved);
    CHECK(CaseStudyConfig::preset(3).closedown);
    CHECK(CaseStudyConfig::preset(4).imposed_repair_threshold.value_or(0.0) == 1e-5);
    CHECK_THROWS_AS(CaseStudyConfig::preset(5), ConfigError);
}

TEST_CASE("estimate of a sample") {
    const auto e = estimate_of({1.0, 2.0, 3.0});
    CHECK(e.mean == doctest::Approx(2.0));
    CHECK(e.se == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(e.n == 3);
}

TEST_CASE("value of SHM vanishes when no threshold can be hit") {
    const auto ctx = small_context();
    const PolicyHeuristics w{1.0, 1.0, 5.0};
    const auto r = voshm_estimate(w, w, CaseStudyConfig::preset(1), ctx, small_study(4));
    CHECK(r.difference.mean == 0.0);
    for (double d : r.differences) CHECK(d == 0.0);
}

TEST_CASE("all costs zero give zero cost") {
    auto ctx = small_context();
    ctx.costs.c_F = ctx.costs.c_I = ctx.costs.c_R = ctx.costs.c_clsdn = 0.0;
    const auto est = expected_cost(Mode::shm, PolicyHeuristics{}, CaseStudyConfig::preset(2), ctx, small_study(3));
    CHECK(est.total.mean == 0.0);
    for (const auto& row : est.rows) CHECK(row.total == 0.0);
}

TEST_CASE("infinite thresholds and interval give no inspection or repair cost") {
    // Unobserved shocks: no shock-epoch inspections either.
    const auto ctx = small_context();
    const PolicyHeuristics never{kInf, kInf, kInf};
    const auto est = expected_cost(Mode::inspection_only, never, CaseStudyConfig::preset(2), ctx, small_study(3));
    CHECK(est.inspection.mean == 0.0);
    CHECK(est.repair.mean == 0.0);
    CHECK(est.risk.mean > 0.0);
}

TEST_CASE("episode ledger re-derivation") {
    const auto ctx = small_context();
    const auto scenario = make_episode_scenario(ctx, 21, 2);
    Rng rng = make_rng(21, 2, StreamId::filter);
    EpisodeOptions opt;
    opt.record_trace = true;
    const auto c = simulate_episode(scenario, ThetaCurve(scenario.env_truth), Mode::inspection_only,
                                    PolicyHeuristics{}, CaseStudyConfig::preset(1), ctx, rng, opt);
    double inspection = 0.0, repair = 0.0, risk = 0.0;
    for (const auto& a : c.actions) {
        if (a.kind == ActionKind::inspection) inspection += a.discounted_cost;
        if (a.kind == ActionKind::repair) repair += a.discounted_cost;
    }
    for (const auto& t : c.truth) risk += t.discounted_risk;
    const double scale = std::max(1.0, c.total());
    CHECK(std::abs(inspection - c.inspection) <= 1e-10 * scale);
    CHECK(std::abs(repair - c.repair) <= 1e-10 * scale);
    CHECK(std::abs(risk - c.risk) <= 1e-10 * scale);
    for (const auto& a : c.actions) {
        if (a.kind == ActionKind::inspection)
            CHECK(a.discounted_cost == doctest::Approx(ctx.costs.c_I * discount_factor(a.time, ctx.costs.r)));
    }
}

TEST_CASE("observed shock triggers one repair") {
    const auto ctx = small_context();
    const auto scenario = shock_scenario(ctx, 20.0);
    Rng rng = make_rng(9, 0, StreamId::filter);
    EpisodeOptions opt;
    opt.record_trace = true;
    const auto c = simulate_episode(scenario, ThetaCurve(scenario.env_truth), Mode::inspection_only,
                                    PolicyHeuristics{1.0, 1e-5, kInf}, CaseStudyConfig::preset(1), ctx, rng, opt);
    REQUIRE(c.count(ActionKind::repair) == 1);
    double repaired_at = -1.0;
    for (const auto& a : c.actions)
        if (a.kind == ActionKind::repair) repaired_at = a.time;
    CHECK(repaired_at == 10.0);
    bool seen = false;
    for (const auto& row : c.trace) {
        if (row.time > repaired_at && !seen) {
            CHECK(row.mean_x < 0.05);
            seen = true;
        }
    }
    CHECK(seen);
    CHECK(c.repair == doctest::Approx(ctx.costs.c_R * discount_factor(10.0, ctx.costs.r)));
}

TEST_CASE("closedown accrues while a repair is pending") {
    const auto ctx = small_context();
    const auto scenario = shock_scenario(ctx, 20.0);
    auto case_config = CaseStudyConfig::preset(1);
    case_config.closedown = true;
    Rng rng = make_rng(9, 0, StreamId::filter);
    const auto c = simulate_episode(scenario, ThetaCurve(scenario.env_truth), Mode::inspection_only,
                                    PolicyHeuristics{1.0, 1e-5, kInf}, case_config, ctx, rng);
    CHECK(c.closedown > 0.0);
}

TEST_CASE("optimizer grid handling") {
    const auto ctx = small_context();
    SUBCASE("single point") {
        const auto r = optimize_heuristics(Mode::inspection_only, {5e-4}, {1e-3}, 5.0, CaseStudyConfig::preset(1),
                                           ctx, small_study(2));
        REQUIRE(r.surface.size() == 1);
        CHECK(r.best.p_th_I == 5e-4);
        CHECK(r.best.p_th_R == 1e-3);
    }
    SUBCASE("imposed repair threshold collapses the repair axis") {
        const auto grid = log_grid(1e-5, 1e-3, 3);
        const auto r = optimize_heuristics(Mode::inspection_only, grid, grid, 5.0, CaseStudyConfig::preset(4), ctx,
                                           small_study(2));
        CHECK(r.surface.size() == 3);
        for (const auto& g : r.surface) CHECK(g.policy.p_th_R == *CaseStudyConfig::preset(4).imposed_repair_threshold);
    }
}

TEST_CASE("log grid") {
    const auto g = log_grid(1e-6, 1e-2, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(1e-6));
    CHECK(g[2] == doctest::Approx(1e-4));
    CHECK(g.back() == doctest::Approx(1e-2));
}

TEST_CASE("value of information without information is zero") {
    const auto ctx = small_context();
    const PolicyHeuristics w{1e-3, 1e-3, kInf};
    const auto r = voi_estimate(w, w, Mode::prior, CaseStudyConfig::preset(1), ctx, small_study(3));
    CHECK(r.difference.mean == 0.0);
}

TEST_CASE("study results do not depend on the worker count") {
    const auto ctx = small_context();
    auto one = small_study(4);
    auto many = one;
    many.workers = 3;
    const auto a = expected_cost(Mode::shm, PolicyHeuristics{}, CaseStudyConfig::preset(2), ctx, one);
    const auto b = expected_cost(Mode::shm, PolicyHeuristics{}, CaseStudyConfig::preset(2), ctx, many);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].total == b.rows[i].total);
}
