#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include "doctest.h"

#include "voshm/errors.hpp"
#include "voshm/structural.hpp"
#include "voshm/surrogate.hpp"

using namespace voshm;

namespace {

const BridgeModel& reference_model() {
    static const BridgeModel model{BridgeConfig{}};
    return model;
}

}  // namespace

TEST_CASE("damaged support stiffness") {
    CHECK(damaged_support_stiffness(1e7, 0.0) == doctest::Approx(1e7));
    CHECK(damaged_support_stiffness(1e7, 1.0) == doctest::Approx(5e6));
    CHECK(damaged_support_stiffness(1e7, 3.75) == doctest::Approx(2.105e6).epsilon(1e-3));
    CHECK(damaged_support_stiffness(1e7, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK_THROWS_AS(damaged_support_stiffness(1e7, -0.1), DomainError);
}

TEST_CASE("undamaged frequencies match the stored reference") {
    const double expected[] = {1.9035491464, 2.3409061072, 5.2158623515, 6.6134458870, 9.7327521740};
    const auto f = reference_model().modal_analysis(0.0, BridgeConfig{}.nominal_youngs_modulus).frequencies();
    REQUIRE(f.size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(f[static_cast<std::size_t>(i)] == doctest::Approx(expected[i]).epsilon(1e-8));
}

TEST_CASE("eigenvalues scale linearly with the modulus when supports are rigid") {
    // With (near) rigid supports the spectrum is homogeneous of degree one in E.
    BridgeConfig cfg;
    cfg.support_stiffness_vertical = {1e16, 1e16, 1e16};
    const BridgeModel model(cfg);
    const double e = cfg.nominal_youngs_modulus;
    const auto l1 = model.modal_analysis(0.0, e).eigenvalues;
    const auto l2 = model.modal_analysis(0.0, 2.0 * e).eigenvalues;
    for (std::size_t i = 0; i < l1.size(); ++i) CHECK(l2[i] / l1[i] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("eigenvalues are homogeneous in (E, K) jointly") {
    // Springs must scale with E for the eigenproblem to be homogeneous.
    const double e = BridgeConfig{}.nominal_youngs_modulus;
    const auto& model = reference_model();
    const auto a = model.eigenpairs(e, 1e7, 5).eigenvalues;
    for (double c : {0.25, 0.5, 2.0, 3.0, 7.5}) {
        BridgeConfig scaled;
        scaled.support_stiffness_vertical = {c * 1e7, c * 1e7, c * 1e7};
        const auto b = BridgeModel(scaled).eigenpairs(c * e, c * 1e7, 5).eigenvalues;
        // Exact for powers of two; otherwise limited by the eigensolver round-off.
        const double tol = std::exp2(std::round(std::log2(c))) == c ? 1e-14 : 1e-9;
        for (int i = 0; i < 5; ++i) CHECK(std::abs(b(i) / (c * a(i)) - 1.0) < tol);
    }
}

TEST_CASE("lost middle support approaches a simply supported single span") {
    BridgeConfig cfg;
    cfg.support_stiffness_vertical = {1e14, 1e7, 1e14};
    const BridgeModel model(cfg);
    const double e = cfg.nominal_youngs_modulus;
    const auto shapes = model.eigenpairs(e, 0.0, 3);
    const double length = 50.0;
    const double mu = cfg.density * cfg.section_area;
    for (int n = 1; n <= 3; ++n) {
        const double analytic = n * n * std::numbers::pi / (2.0 * length * length) *
                                std::sqrt(e * cfg.section_inertia / mu);
        CHECK(ModalResult::frequency_of(shapes.eigenvalues(n - 1)) == doctest::Approx(analytic).epsilon(1e-5));
    }
}

TEST_CASE("damage lowers every frequency") {
    const double e = BridgeConfig{}.nominal_youngs_modulus;
    const auto& model = reference_model();
    auto prev = model.modal_analysis(0.0, e).eigenvalues;
    for (double x : {0.5, 2.0, 10.0, 100.0}) {
        const auto cur = model.modal_analysis(x, e).eigenvalues;
        for (std::size_t i = 0; i < cur.size(); ++i) CHECK(cur[i] <= prev[i] * (1.0 + 1e-9));  // antisymmetric modes do not move
        prev = cur;
    }
}

TEST_CASE("negative deterioration is rejected") {
    const double e = BridgeConfig{}.nominal_youngs_modulus;
    CHECK_THROWS_AS(reference_model().modal_analysis(-1.0, e), DomainError);
}

TEST_CASE("invalid bridge configuration names the field") {
    BridgeConfig cfg;
    cfg.density = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("capacity curve") {
    const auto curve = capacity_curve(reference_model(), default_capacity_grid());
    CHECK(curve.evaluate(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < curve.r_values.size(); ++i) CHECK(curve.r_values[i] <= curve.r_values[i - 1]);
    // Knots are reproduced and midpoints interpolate linearly.
    const std::size_t k = curve.x_grid.size() / 2;
    CHECK(curve.evaluate(curve.x_grid[k]) == doctest::Approx(curve.r_values[k]));
    const double mid = 0.5 * (curve.x_grid[k] + curve.x_grid[k + 1]);
    CHECK(curve.evaluate(mid) == doctest::Approx(0.5 * (curve.r_values[k] + curve.r_values[k + 1])));
    CHECK(curve.evaluate(1e9) >= CapacityCurve::r_min);
}

TEST_CASE("surrogate reproduces the finite-element model") {
    const auto model = std::make_shared<BridgeModel>(BridgeConfig{});
    const auto grid = default_surrogate_grid(model->config());
    const auto surrogate = fit_surrogate(*model, grid.x, grid.e, 5);
    const FeModalPredictor fe(model, 5);
    double worst = 0.0;
    for (std::size_t ix = 0; ix < grid.x.size(); ix += 4) {
        if (!std::isfinite(grid.x[ix])) continue;
        for (std::size_t ie = 0; ie < grid.e.size(); ie += 2) {
            const auto s = surrogate.predict(grid.x[ix], grid.e[ie]).eigenvalues;
            const auto f = fe.predict(grid.x[ix], grid.e[ie]).eigenvalues;
            for (std::size_t m = 0; m < 5; ++m) worst = std::max(worst, std::abs(s[m] / f[m] - 1.0));
        }
    }
    CHECK(worst <= 1e-3);

    SUBCASE("json round trip") {
        const auto back = ModalSurrogate::from_json(surrogate.to_json());
        for (double x : {0.0, 0.7, 12.0}) {
            const auto a = surrogate.predict(x, 3e10).eigenvalues;
            const auto b = back.predict(x, 3e10).eigenvalues;
            for (std::size_t m = 0; m < 5; ++m) CHECK(a[m] == b[m]);
        }
    }
    SUBCASE("clamping outside the domain is flagged") {
        CHECK_FALSE(surrogate.predict_checked(0.5, 3e10).out_of_domain);
        CHECK(surrogate.predict_checked(0.5, 1e12).out_of_domain);
    }
}
