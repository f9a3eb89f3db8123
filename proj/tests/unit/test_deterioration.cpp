#include <cmath>

#include "doctest.h"

#include "voshm/deterioration.hpp"
#include "voshm/errors.hpp"

using namespace voshm;

TEST_CASE("gradual increment over the first year") {
    CHECK(gradual_increment(1.94e-4, 2.0, 0.0, 1.0, 0.0) == doctest::Approx(1.94e-4).epsilon(1e-12));
    CHECK(gradual_increment(0.0, 2.0, 3.0, 4.0, 0.3) == 0.0);
    CHECK(gradual_increment(1e-4, 2.0, 3.0, 4.0, std::log(2.0)) == doctest::Approx(2.0 * 1e-4 * 2.0 * 3.5));
}

TEST_CASE("zero rate leaves the state unchanged") {
    DeteriorationParams p;
    p.shock_rate = 0.0;
    Rng rng = make_rng(1, 0, StreamId::filter);
    AugmentedState s{0.3, 0.0, 2.0, 4.0};
    const auto next = transition_step(s, 4.0, 5.0, p, rng);
    CHECK(next.x == 0.3);
    CHECK(next.time_since_repair == doctest::Approx(5.0));
}

TEST_CASE("no shocks without a shock rate") {
    DeteriorationParams p;
    p.shock_rate = 0.0;
    Rng rng = make_rng(2, 0, StreamId::filter);
    for (int i = 0; i < 100; ++i) CHECK(sample_shock_increment(1.0, p, rng) == 0.0);
}

TEST_CASE("shock increment given a jump is positive") {
    DeteriorationParams p;
    Rng rng = make_rng(3, 0, StreamId::filter);
    for (int i = 0; i < 100; ++i) CHECK(sample_shock_increment_given_jump(1.0, p, rng) > 0.0);
}

TEST_CASE("shock increment CDF") {
    const DeteriorationParams p;
    const ShockIncrementCdf cdf(p, 1.0, 6);
    CHECK(cdf(0.0) == doctest::Approx(std::exp(-0.04)).epsilon(1e-12));
    CHECK_THROWS_AS(cdf(-1.0), DomainError);
    double prev = 0.0;
    for (double d = 0.0; d < 40.0; d += 0.25) {
        const double v = cdf(d);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cdf.truncation_bound() < 1e-8);

    const auto few = shock_increment_cdf(1.0, 1.0, p, 1, ConvolutionMethod::monte_carlo, 1e-8);
    CHECK(few.warning);
    const auto mm = ShockIncrementCdf(p, 1.0, 6, ConvolutionMethod::moment_matched);
    CHECK(mm(4.0) == doctest::Approx(cdf(4.0)).epsilon(1e-2));
}

TEST_CASE("scenario structure and round trip") {
    const DeteriorationParams p;
    Rng rng = make_rng(11, 4, StreamId::scenario);
    const auto s = sample_scenario(p, 50.0, rng);
    REQUIRE(s.times.size() >= 51);
    CHECK(s.times.front() == 0.0);
    CHECK(s.times.back() == 50.0);
    CHECK(s.x.front() == 0.0);
    CHECK(s.omega.size() == s.interval_count());
    for (std::size_t k = 1; k < s.x.size(); ++k) CHECK(s.x[k] >= s.x[k - 1]);

    // The stored path is the repair-free re-derivation.
    const auto path = scenario_path(s);
    for (std::size_t k = 0; k < path.size(); ++k) CHECK(path[k] == doctest::Approx(s.x[k]).epsilon(1e-12));

    const auto back = DeteriorationScenario::from_json(s.to_json());
    CHECK(back.x == s.x);
    CHECK(back.times == s.times);
    CHECK(back.shocks.size() == s.shocks.size());
}

TEST_CASE("repair resets the path") {
    DeteriorationParams p;
    Rng rng = make_rng(12, 0, StreamId::scenario);
    const auto s = sample_scenario(p, 20.0, rng);
    const std::size_t at[] = {10};
    const auto path = scenario_path(s, at);
    CHECK(path[10] == 0.0);
    for (std::size_t k = 0; k < 10; ++k) CHECK(path[k] == doctest::Approx(s.x[k]));
}

TEST_CASE("parameter validation") {
    DeteriorationParams p;
    p.shock_rate = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}
