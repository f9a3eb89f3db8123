#pragma once

#include <span>
#include <vector>

#include "json.hpp"

#include "voshm/environment.hpp"
#include "voshm/random.hpp"

namespace voshm {

/// Gradual rate law A t^B exp(omega) plus compound-Poisson shocks.
struct DeteriorationParams {
    LogNormalSpec a{1.94e-4, 0.4};
    NormalSpec b{2.0, 0.1};
    double omega_mean = -0.005;
    double omega_sd = 0.1;
    double shock_rate = 0.04;  // 1/year
    LogNormalSpec shock_magnitude{3.75, 0.25};
    double horizon_years = 50.0;

    void validate() const;
};

/// What a filter knows about shocks inside a prediction interval.
enum class ShockKnowledge {
    unknown,   // Poisson number of jumps
    none,      // no jump occurred
    occurred,  // at least one jump occurred
};

struct AugmentedState {
    double x = 0.0;
    double a = 0.0;
    double b = 0.0;
    double time_since_repair = 0.0;  // years
};

struct ShockEvent {
    double time = 0.0;       // years
    double magnitude = 0.0;
};

/**
 * One ground-truth realization over [0, horizon].
 *
 * The grid holds the yearly points and every shock instant. omega[k] is the
 * process noise of interval (times[k], times[k+1]]. x is the path without any
 * repair; repaired paths are re-derived with scenario_step.
 */
struct DeteriorationScenario {
    double a = 0.0;
    double b = 0.0;
    double horizon = 0.0;
    std::vector<ShockEvent> shocks;
    std::vector<double> times;
    std::vector<double> omega;
    std::vector<double> temperatures;  // C, one per grid point
    std::vector<double> x;

    std::size_t interval_count() const { return times.empty() ? 0 : times.size() - 1; }
    /// Sum of shock magnitudes in (t_from, t_to].
    double shock_sum(double t_from, double t_to) const;
    bool is_shock_time(std::size_t k) const;

    nlohmann::json to_json() const;
    static DeteriorationScenario from_json(const nlohmann::json& doc);
};

DeteriorationScenario sample_scenario(const DeteriorationParams& params, double horizon, Rng& rng,
                                      const TemperatureModel& temperature = {});

/// Truth state at times[k + 1] from the state at times[k]; repairs enter through `state`.
AugmentedState scenario_step(const DeteriorationScenario& scenario, std::size_t k, const AugmentedState& state);

/// Path on the scenario grid with the state reset to zero at the given grid indices.
std::vector<double> scenario_path(const DeteriorationScenario& scenario, std::span<const std::size_t> repairs = {});

/// Midpoint-rule gradual increment a b s_mid^(b-1) dt exp(omega).
double gradual_increment(double a, double b, double s_from, double s_to, double omega);

/// One filter transition: gradual increment with sampled omega plus a shock increment.
AugmentedState transition_step(const AugmentedState& state, double t_from, double t_to,
                               const DeteriorationParams& params, Rng& rng,
                               ShockKnowledge knowledge = ShockKnowledge::unknown);

/// Sum of Poisson(rate dt) lognormal magnitudes.
double sample_shock_increment(double dt, const DeteriorationParams& params, Rng& rng);
/// Same, conditioned on at least one jump.
double sample_shock_increment_given_jump(double dt, const DeteriorationParams& params, Rng& rng);

enum class ConvolutionMethod { monte_carlo, moment_matched };

/**
 * CDF of the jump increment over an interval of length dt, as the truncated
 * Poisson mixture of i-fold magnitude convolutions. The convolutions are
 * tabulated once on construction.
 */
class ShockIncrementCdf {
public:
    ShockIncrementCdf(const DeteriorationParams& params, double dt, int n_terms,
                      ConvolutionMethod method = ConvolutionMethod::monte_carlo,
                      int mc_draws = 100000, std::uint64_t seed = 20240601);

    double operator()(double d) const;
    /// Poisson mass beyond n_terms.
    double truncation_bound() const noexcept { return truncation_bound_; }
    bool exceeds(double tolerance) const noexcept { return truncation_bound_ > tolerance; }

private:
    double fold_cdf(int i, double d) const;

    LogNormalSpec magnitude_;
    ConvolutionMethod method_;
    std::vector<double> poisson_mass_;            // i = 0..n_terms
    std::vector<std::vector<double>> fold_sums_;  // sorted MC sums per i
    double truncation_bound_ = 0.0;
};

struct ShockCdfValue {
    double probability = 0.0;
    double truncation_bound = 0.0;
    bool warning = false;  // bound above the requested tolerance
};

ShockCdfValue shock_increment_cdf(double d, double dt, const DeteriorationParams& params, int n_terms,
                                  ConvolutionMethod method = ConvolutionMethod::monte_carlo,
                                  double tolerance = 1e-8);

nlohmann::json deterioration_params_to_json(const DeteriorationParams& p);

}  // namespace voshm
