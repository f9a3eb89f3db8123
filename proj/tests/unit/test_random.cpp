#include <cmath>

#include "doctest.h"

#include "voshm/random.hpp"

using namespace voshm;

TEST_CASE("derived seeds separate streams and indices") {
    CHECK(derive_seed(1, 0, StreamId::scenario) == derive_seed(1, 0, StreamId::scenario));
    CHECK(derive_seed(1, 0, StreamId::scenario) != derive_seed(1, 0, StreamId::filter));
    CHECK(derive_seed(1, 0, StreamId::scenario) != derive_seed(1, 1, StreamId::scenario));
    CHECK(derive_seed(1, 0, StreamId::scenario) != derive_seed(2, 0, StreamId::scenario));
}

TEST_CASE("lognormal parameterization") {
    const LogNormalSpec s{3.75, 0.25};
    CHECK(std::exp(s.mu() + 0.5 * s.sigma() * s.sigma()) == doctest::Approx(3.75));
    CHECK(s.second_moment() == doctest::Approx(3.75 * 3.75 * (1.0 + 0.0625)));
    Rng rng = make_rng(1, 0, StreamId::auxiliary);
    double sum = 0.0;
    for (int i = 0; i < 200000; ++i) sum += s.sample(rng);
    CHECK(sum / 200000 == doctest::Approx(3.75).epsilon(0.005));
}

TEST_CASE("normal distribution parameters") {
    const NormalSpec n{2.0, 0.1};
    CHECK(n.sd() == doctest::Approx(0.2));
    CHECK(n.log_density(2.0) == doctest::Approx(-std::log(0.2) - 0.5 * std::log(2.0 * M_PI)));
}
