#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "voshm/errors.hpp"
#include "voshm/gaussian_mixture.hpp"
#include "voshm/particle_filter.hpp"

using namespace voshm;

TEST_CASE("effective sample size") {
    CHECK(effective_sample_size(std::vector<double>(100, 0.01)) == doctest::Approx(100.0));
    std::vector<double> one(100, 0.0);
    one[7] = 1.0;
    CHECK(effective_sample_size(one) == doctest::Approx(1.0));
    std::vector<double> two(100, 0.0);
    two[1] = two[2] = 0.5;
    CHECK(effective_sample_size(two) == doctest::Approx(2.0));
}

TEST_CASE("initial ensemble") {
    const DeteriorationParams prior;
    Rng rng = make_rng(1, 0, StreamId::filter);
    const auto e = init_ensemble(prior, 100000, rng);
    REQUIRE(e.size() == 100000);
    for (std::size_t i = 0; i < e.size(); i += 997) {
        CHECK(e.weights[i] == doctest::Approx(1e-5));
        CHECK(e.states[i].x == 0.0);
    }
    CHECK(e.mean_a() == doctest::Approx(prior.a.mean).epsilon(0.01));
    CHECK(e.mean_b() == doctest::Approx(prior.b.mean).epsilon(0.01));
}

TEST_CASE("flat likelihood leaves weights unchanged") {
    Rng rng = make_rng(2, 0, StreamId::filter);
    auto e = init_ensemble(DeteriorationParams{}, 100, rng);
    e.weights[3] *= 3.0;
    const double s = std::accumulate(e.weights.begin(), e.weights.end(), 0.0);
    for (double& w : e.weights) w /= s;
    const auto before = e.weights;
    update(e, std::vector<double>(100, -2.5));
    for (std::size_t i = 0; i < 100; ++i) CHECK(e.weights[i] == doctest::Approx(before[i]).epsilon(1e-12));
}

TEST_CASE("update normalizes and degeneracy is reported") {
    Rng rng = make_rng(3, 0, StreamId::filter);
    auto e = init_ensemble(DeteriorationParams{}, 100, rng);
    std::vector<double> ll(100);
    for (std::size_t i = 0; i < 100; ++i) ll[i] = -1000.0 * static_cast<double>(i);
    update(e, ll);
    CHECK(std::accumulate(e.weights.begin(), e.weights.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.weights[0] == doctest::Approx(1.0));
    CHECK_THROWS_AS(update(e, std::vector<double>(100, -std::numeric_limits<double>::infinity())), FilterDegeneracy);
}

TEST_CASE("prediction moves the state forward") {
    DeteriorationParams p;
    p.shock_rate = 0.0;
    Rng rng = make_rng(4, 0, StreamId::filter);
    auto e = init_ensemble(p, 200, rng);
    predict(e, 1.0, p, rng);
    CHECK(e.time == 1.0);
    for (const auto& s : e.states) {
        CHECK(s.x > 0.0);
        CHECK(s.time_since_repair == doctest::Approx(1.0));
    }
    reset_after_repair(e);
    for (const auto& s : e.states) CHECK(s.x == 0.0);
}

TEST_CASE("mixture resampling preserves moments") {
    DeteriorationParams p;
    Rng rng = make_rng(5, 0, StreamId::filter);
    auto e = init_ensemble(p, 10000, rng);
    for (int k = 1; k <= 10; ++k) predict(e, k, p, rng);
    // Non-uniform weights from a synthetic inspection.
    update_inspection(e, InspectionObservation{10.0, e.mean_x()}, ObservationSettings{});
    const double mx = e.mean_x(), sx = e.sd_x(), ma = e.mean_a(), mb = e.mean_b();
    const auto out = gm_resample(e, 3, EmSettings{}, rng);
    CHECK(out.components >= 1);
    CHECK(e.mean_x() == doctest::Approx(mx).epsilon(0.03));
    CHECK(e.sd_x() == doctest::Approx(sx).epsilon(0.05));
    CHECK(e.mean_a() == doctest::Approx(ma).epsilon(0.03));
    CHECK(e.mean_b() == doctest::Approx(mb).epsilon(0.03));
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(e.states[i].x >= 0.0);
        CHECK(e.states[i].a > 0.0);
    }
    CHECK(e.ess() == doctest::Approx(10000.0));
}

TEST_CASE("mixture on a single support point") {
    Eigen::MatrixXd data(50, 3);
    for (int i = 0; i < 50; ++i) data.row(i) << 0.5, 1e-4, 2.0;
    Rng rng = make_rng(6, 0, StreamId::filter);
    const auto gm = select_weighted_gmm(data, std::vector<double>(50, 1.0), 3, EmSettings{}, rng);
    CHECK(gm.components() == 1);
    const auto x = gm.sample(rng);
    CHECK(x(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(x(1) == doctest::Approx(1e-4).epsilon(1e-14));
    CHECK(x(2) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("mixture separates two clusters") {
    Rng rng = make_rng(7, 0, StreamId::filter);
    Eigen::MatrixXd data(2000, 2);
    for (int i = 0; i < 2000; ++i) {
        const double c = i < 1000 ? -5.0 : 5.0;
        data.row(i) << c + standard_normal(rng), standard_normal(rng);
    }
    const auto gm = select_weighted_gmm(data, std::vector<double>(2000, 1.0), 3, EmSettings{}, rng);
    CHECK(gm.components() >= 2);
}
