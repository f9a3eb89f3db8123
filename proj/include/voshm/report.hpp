#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "voshm/lifecycle.hpp"

namespace voshm {

// Column orders are fixed; see README for the schemas.

/// scenario,branch,C_I,C_R,C_clsdn,R_F,total,degenerate
std::string episodes_csv(const std::vector<EpisodeRow>& rows);

/// time,true_x,mean_x,sd_x,mean_a,sd_a,mean_b,sd_b,ess,resampled,pr_failure,hazard,actions
std::string trace_csv(const CostBreakdown& episode);

/// time,kind,temperature,lambda_1..lambda_n,measured_state (blank where not applicable)
std::string observations_csv(const CostBreakdown& episode, int n_modes);

/// time,kind,discounted_cost,value
std::string actions_csv(const CostBreakdown& episode);

/// Long format: branch,time,series,value. Series: true_x, mean_x, sd_x,
/// pr_failure, hazard (filter), interval_prob, accumulated_failure (truth).
std::string trajectories_csv(const std::string& branch, const CostBreakdown& episode);

/// p_th_I,p_th_R,dt_I,mean,se,n,degenerate
std::string surface_csv(const OptimizationResult& result);

/// {n, degenerate, mean: {...}, se: {...}}; means and errors are null when n = 0.
nlohmann::json cost_estimate_json(const CostEstimate& estimate);
nlohmann::json estimate_json(const Estimate& estimate);
nlohmann::json policy_json(const PolicyHeuristics& policy);

/// Shortest round-trip text of a double; "inf" for infinity.
std::string format_number(double v);

/// Creates parent directories as needed. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace voshm
