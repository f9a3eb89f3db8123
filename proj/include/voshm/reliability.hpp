#pragma once

#include <span>
#include <string>
#include <vector>

#include "voshm/structural.hpp"

namespace voshm {

/// Annual maximum demand, Gumbel in normalized-capacity units.
struct GumbelDemand {
    double scale = 0.0509;     // a_n
    double location = 0.297;   // b_n

    void validate() const;
    double cdf(double s) const;
};

/// Pr(S_max > r) = 1 - F(r) for the annual maximum.
double demand_exceedance(const GumbelDemand& demand, double r);

/// Failure probability over an interval of dt years: 1 - F(r)^dt.
/// Equals demand_exceedance for dt = 1.
double interval_failure_probability(const GumbelDemand& demand, double r, double dt);

/// Running 1 - prod(1 - p_m).
std::vector<double> accumulated_failure_given_path(std::span<const double> interval_probs);

/// Weighted average of per-particle accumulated failure probabilities.
double posterior_failure_estimate(std::span<const double> weights, std::span<const double> values);

enum class HazardConvention {
    survival,    // (P_k - P_{k-1}) / (1 - P_{k-1})
    as_printed,  // (P_k - P_{k-1}) / P_{k-1}
};

HazardConvention parse_hazard_convention(const std::string& name);
std::string to_string(HazardConvention convention);

double hazard_rate(double pr_k, double pr_k_minus_1, HazardConvention convention = HazardConvention::survival);

/// Rate per year equivalent to a hazard h over an interval of dt years.
double annualized_hazard(double h, double dt);

/// Capacity curve plus demand: the conditional interval failure probability of a state.
class FailureModel {
public:
    FailureModel(CapacityCurve capacity, GumbelDemand demand);

    double interval_probability(double x, double dt = 1.0) const;
    const CapacityCurve& capacity() const noexcept { return capacity_; }
    const GumbelDemand& demand() const noexcept { return demand_; }

private:
    CapacityCurve capacity_;
    GumbelDemand demand_;
};

struct FailureTrace {
    std::vector<double> times;
    std::vector<double> interval_probs;
    std::vector<double> accumulated;
    std::vector<double> hazard;
};

}  // namespace voshm
