#include "voshm/reliability.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

void GumbelDemand::validate() const {
    if (!(scale > 0.0)) throw ConfigError("must be positive", "reliability.gumbel_a");
    if (!std::isfinite(location)) throw ConfigError("must be finite", "reliability.gumbel_b");
}

double GumbelDemand::cdf(double s) const { return std::exp(-std::exp(-(s - location) / scale)); }

double demand_exceedance(const GumbelDemand& demand, double r) {
    return interval_failure_probability(demand, r, 1.0);
}

double interval_failure_probability(const GumbelDemand& demand, double r, double dt) {
    if (!(r > 0.0)) throw DomainError("capacity must be positive");
    if (!(dt >= 0.0)) throw DomainError("interval length must be non-negative");
    return -std::expm1(-dt * std::exp(-(r - demand.location) / demand.scale));
}

std::vector<double> accumulated_failure_given_path(std::span<const double> interval_probs) {
    std::vector<double> out;
    out.reserve(interval_probs.size());
    double log_survival = 0.0;
    for (double p : interval_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("interval probability outside [0, 1]");
        log_survival += std::log1p(-p);
        out.push_back(-std::expm1(log_survival));
    }
    return out;
}

double posterior_failure_estimate(std::span<const double> weights, std::span<const double> values) {
    if (weights.size() != values.size()) throw DomainError("weights and values differ in length");
    double sum = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) sum += weights[j] * values[j];
    return sum;
}

HazardConvention parse_hazard_convention(const std::string& name) {
    if (name == "survival") return HazardConvention::survival;
    if (name == "as-printed") return HazardConvention::as_printed;
    throw ConfigError(fmt::format("unknown convention '{}' (survival, as-printed)", name),
                      "reliability.hazard_convention");
}

std::string to_string(HazardConvention convention) {
    return convention == HazardConvention::survival ? "survival" : "as-printed";
}

double hazard_rate(double pr_k, double pr_k_minus_1, HazardConvention convention) {
    const double numerator = pr_k - pr_k_minus_1;
    const double denominator = convention == HazardConvention::survival ? 1.0 - pr_k_minus_1 : pr_k_minus_1;
    if (denominator == 0.0) {
        if (numerator == 0.0) return 0.0;
        throw DomainError("hazard denominator is zero with a nonzero increment");
    }
    return std::max(numerator, 0.0) / denominator;
}

double annualized_hazard(double h, double dt) {
    if (dt == 1.0 || h <= 0.0) return h;
    if (h >= 1.0) return 1.0;
    return -std::expm1(std::log1p(-h) / dt);
}

FailureModel::FailureModel(CapacityCurve capacity, GumbelDemand demand)
    : capacity_(std::move(capacity)), demand_(demand) {
    demand_.validate();
}

double FailureModel::interval_probability(double x, double dt) const {
    return interval_failure_probability(demand_, capacity_.evaluate(x), dt);
}

}  // namespace voshm
