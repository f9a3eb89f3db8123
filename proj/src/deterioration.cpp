#include "voshm/deterioration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

int sample_poisson(double mean, Rng& rng) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<int> dist(mean);
    return dist(rng);
}

// Zero-truncated Poisson by inversion; the means involved are small.
int sample_poisson_at_least_one(double mean, Rng& rng) {
    if (mean <= 0.0) return 1;
    const double u = uniform01(rng) * -std::expm1(-mean);
    double p = std::exp(-mean) * mean;  // P(N = 1)
    double cumulative = p;
    int n = 1;
    while (cumulative < u && n < 1000) {
        ++n;
        p *= mean / n;
        cumulative += p;
    }
    return n;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

void DeteriorationParams::validate() const {
    if (!(a.mean >= 0.0)) throw ConfigError("must be non-negative", "deterioration.A_mean");
    if (!(a.cv >= 0.0)) throw ConfigError("must be non-negative", "deterioration.A_cv");
    if (!(b.cv >= 0.0)) throw ConfigError("cv must be non-negative", "deterioration.B_cv");
    if (!(omega_sd >= 0.0)) throw ConfigError("must be non-negative", "deterioration.omega_sd");
    if (!(shock_rate >= 0.0)) throw ConfigError("must be non-negative", "deterioration.shock_rate");
    if (!(shock_magnitude.mean > 0.0)) throw ConfigError("must be positive", "deterioration.D_mean");
    if (!(shock_magnitude.cv >= 0.0)) throw ConfigError("must be non-negative", "deterioration.D_cv");
    if (!(horizon_years > 0.0)) throw ConfigError("must be positive", "deterioration.horizon_years");
}

double DeteriorationScenario::shock_sum(double t_from, double t_to) const {
    double sum = 0.0;
    for (const auto& s : shocks) {
        if (s.time > t_from && s.time <= t_to) sum += s.magnitude;
    }
    return sum;
}

bool DeteriorationScenario::is_shock_time(std::size_t k) const {
    return std::any_of(shocks.begin(), shocks.end(), [&](const ShockEvent& s) { return s.time == times[k]; });
}

double gradual_increment(double a, double b, double s_from, double s_to, double omega) {
    const double dt = s_to - s_from;
    if (a == 0.0 || dt <= 0.0) return 0.0;
    const double mid = 0.5 * (s_from + s_to);
    return a * b * std::pow(mid, b - 1.0) * dt * std::exp(omega);
}

DeteriorationScenario sample_scenario(const DeteriorationParams& params, double horizon, Rng& rng,
                                      const TemperatureModel& temperature) {
    if (!(horizon > 0.0)) {
        throw DomainError("horizon must be positive");
    }
    DeteriorationScenario s;
    s.horizon = horizon;
    s.a = params.a.sample(rng);
    s.b = params.b.sample(rng);

    if (params.shock_rate > 0.0) {
        std::exponential_distribution<double> gap(params.shock_rate);
        for (double t = gap(rng); t <= horizon; t += gap(rng)) {
            s.shocks.push_back({t, 0.0});
        }
        for (auto& e : s.shocks) e.magnitude = params.shock_magnitude.sample(rng);
    }

    for (int year = 0; year <= static_cast<int>(std::floor(horizon)); ++year) s.times.push_back(year);
    if (s.times.back() < horizon) s.times.push_back(horizon);
    for (const auto& e : s.shocks) s.times.push_back(e.time);
    std::sort(s.times.begin(), s.times.end());
    s.times.erase(std::unique(s.times.begin(), s.times.end()), s.times.end());

    s.omega.resize(s.interval_count());
    for (double& w : s.omega) w = params.omega_mean + params.omega_sd * standard_normal(rng);
    s.temperatures.resize(s.times.size());
    for (std::size_t k = 0; k < s.times.size(); ++k) s.temperatures[k] = temperature.sample(s.times[k], rng);

    s.x = scenario_path(s);
    return s;
}

AugmentedState scenario_step(const DeteriorationScenario& scenario, std::size_t k, const AugmentedState& state) {
    const double dt = scenario.times[k + 1] - scenario.times[k];
    AugmentedState next = state;
    next.time_since_repair = state.time_since_repair + dt;
    next.x = state.x +
             gradual_increment(state.a, state.b, state.time_since_repair, next.time_since_repair, scenario.omega[k]) +
             scenario.shock_sum(scenario.times[k], scenario.times[k + 1]);
    return next;
}

std::vector<double> scenario_path(const DeteriorationScenario& scenario, std::span<const std::size_t> repairs) {
    std::vector<double> path(scenario.times.size(), 0.0);
    AugmentedState state{0.0, scenario.a, scenario.b, 0.0};
    for (std::size_t k = 0; k + 1 < scenario.times.size(); ++k) {
        if (std::find(repairs.begin(), repairs.end(), k) != repairs.end()) {
            state.x = 0.0;
            state.time_since_repair = 0.0;
            path[k] = 0.0;
        }
        state = scenario_step(scenario, k, state);
        path[k + 1] = state.x;
    }
    return path;
}

double sample_shock_increment(double dt, const DeteriorationParams& params, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError("interval length must be positive");
    const int n = sample_poisson(params.shock_rate * dt, rng);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += params.shock_magnitude.sample(rng);
    return sum;
}

double sample_shock_increment_given_jump(double dt, const DeteriorationParams& params, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError("interval length must be positive");
    const int n = sample_poisson_at_least_one(params.shock_rate * dt, rng);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += params.shock_magnitude.sample(rng);
    return sum;
}

AugmentedState transition_step(const AugmentedState& state, double t_from, double t_to,
                               const DeteriorationParams& params, Rng& rng, ShockKnowledge knowledge) {
    if (!(t_to > t_from) || t_from < 0.0) {
        throw DomainError(fmt::format("invalid transition interval [{}, {}]", t_from, t_to));
    }
    const double dt = t_to - t_from;
    AugmentedState next = state;
    next.time_since_repair = state.time_since_repair + dt;
    const double omega = params.omega_mean + params.omega_sd * standard_normal(rng);
    next.x += gradual_increment(state.a, state.b, state.time_since_repair, next.time_since_repair, omega);
    switch (knowledge) {
        case ShockKnowledge::unknown: next.x += sample_shock_increment(dt, params, rng); break;
        case ShockKnowledge::occurred: next.x += sample_shock_increment_given_jump(dt, params, rng); break;
        case ShockKnowledge::none: break;
    }
    return next;
}

ShockIncrementCdf::ShockIncrementCdf(const DeteriorationParams& params, double dt, int n_terms,
                                     ConvolutionMethod method, int mc_draws, std::uint64_t seed)
    : magnitude_(params.shock_magnitude), method_(method) {
    if (n_terms < 1) throw DomainError("at least one series term is required");
    if (!(dt > 0.0)) throw DomainError("interval length must be positive");
    const double mean = params.shock_rate * dt;
    poisson_mass_.resize(static_cast<std::size_t>(n_terms) + 1);
    poisson_mass_[0] = std::exp(-mean);
    double total = poisson_mass_[0];
    for (int i = 1; i <= n_terms; ++i) {
        poisson_mass_[static_cast<std::size_t>(i)] = poisson_mass_[static_cast<std::size_t>(i) - 1] * mean / i;
        total += poisson_mass_[static_cast<std::size_t>(i)];
    }
    truncation_bound_ = std::max(0.0, 1.0 - total);

    if (method_ == ConvolutionMethod::monte_carlo) {
        if (mc_draws < 1) throw DomainError("Monte Carlo convolution needs draws");
        Rng rng(seed);
        fold_sums_.resize(static_cast<std::size_t>(n_terms) + 1);
        std::vector<double> partial(static_cast<std::size_t>(mc_draws), 0.0);
        for (int i = 1; i <= n_terms; ++i) {
            for (double& v : partial) v += magnitude_.sample(rng);
            auto& sorted = fold_sums_[static_cast<std::size_t>(i)];
            sorted = partial;
            std::sort(sorted.begin(), sorted.end());
        }
    }
}

double ShockIncrementCdf::fold_cdf(int i, double d) const {
    if (method_ == ConvolutionMethod::monte_carlo) {
        const auto& sorted = fold_sums_[static_cast<std::size_t>(i)];
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), d);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    }
    if (d <= 0.0) return 0.0;
    // Lognormal with the mean and variance of the i-fold sum.
    const double m = i * magnitude_.mean;
    const double v = i * std::pow(magnitude_.mean * magnitude_.cv, 2);
    const double sigma2 = std::log1p(v / (m * m));
    const double mu = std::log(m) - 0.5 * sigma2;
    return normal_cdf((std::log(d) - mu) / std::sqrt(sigma2));
}

double ShockIncrementCdf::operator()(double d) const {
    if (d < 0.0) throw DomainError("increment must be non-negative");
    double p = poisson_mass_[0];
    for (std::size_t i = 1; i < poisson_mass_.size(); ++i) {
        p += poisson_mass_[i] * fold_cdf(static_cast<int>(i), d);
    }
    return std::clamp(p, 0.0, 1.0);
}

ShockCdfValue shock_increment_cdf(double d, double dt, const DeteriorationParams& params, int n_terms,
                                  ConvolutionMethod method, double tolerance) {
    const ShockIncrementCdf cdf(params, dt, n_terms, method);
    return {cdf(d), cdf.truncation_bound(), cdf.exceeds(tolerance)};
}

nlohmann::json DeteriorationScenario::to_json() const {
    nlohmann::json doc;
    doc["format"] = "voshm-scenario";
    doc["A"] = a;
    doc["B"] = b;
    doc["horizon_years"] = horizon;
    auto events = nlohmann::json::array();
    for (const auto& s : shocks) events.push_back({{"time", s.time}, {"magnitude", s.magnitude}});
    doc["shocks"] = std::move(events);
    doc["times"] = times;
    doc["omega"] = omega;
    doc["temperatures"] = temperatures;
    doc["x"] = x;
    return doc;
}

DeteriorationScenario DeteriorationScenario::from_json(const nlohmann::json& doc) {
    DeteriorationScenario s;
    try {
        s.a = doc.at("A").get<double>();
        s.b = doc.at("B").get<double>();
        s.horizon = doc.at("horizon_years").get<double>();
        for (const auto& e : doc.at("shocks")) {
            s.shocks.push_back({e.at("time").get<double>(), e.at("magnitude").get<double>()});
        }
        s.times = doc.at("times").get<std::vector<double>>();
        s.omega = doc.at("omega").get<std::vector<double>>();
        s.temperatures = doc.at("temperatures").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(fmt::format("malformed scenario document: {}", ex.what()), "scenario");
    }
    if (s.times.size() < 2 || s.omega.size() != s.times.size() - 1 || s.temperatures.size() != s.times.size()) {
        throw ConfigError("inconsistent grid, omega and temperature lengths", "scenario");
    }
    if (!std::is_sorted(s.times.begin(), s.times.end()) || s.times.front() != 0.0) {
        throw ConfigError("time grid must start at 0 and ascend", "scenario.times");
    }
    s.x = scenario_path(s);
    return s;
}

nlohmann::json deterioration_params_to_json(const DeteriorationParams& p) {
    return {{"A_mean", p.a.mean},
            {"A_cv", p.a.cv},
            {"B_mean", p.b.mean},
            {"B_cv", p.b.cv},
            {"omega_mean", p.omega_mean},
            {"omega_sd", p.omega_sd},
            {"shock_rate", p.shock_rate},
            {"D_mean", p.shock_magnitude.mean},
            {"D_cv", p.shock_magnitude.cv},
            {"horizon_years", p.horizon_years}};
}

}  // namespace voshm
