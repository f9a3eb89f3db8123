#include "voshm/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

using nlohmann::json;

json number_or_null(double v, bool present) { return present && std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_number(double v) { return fmt::format("{}", v); }

std::string episodes_csv(const std::vector<EpisodeRow>& rows) {
    std::string out = "scenario,branch,C_I,C_R,C_clsdn,R_F,total,degenerate\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{},{}\n", r.scenario, r.branch, format_number(r.inspection),
                           format_number(r.repair), format_number(r.closedown), format_number(r.risk),
                           format_number(r.total), r.degenerate ? 1 : 0);
    }
    return out;
}

std::string trace_csv(const CostBreakdown& episode) {
    std::string out = "time,true_x,mean_x,sd_x,mean_a,sd_a,mean_b,sd_b,ess,resampled,pr_failure,hazard,actions\n";
    for (const auto& r : episode.trace) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", format_number(r.time), format_number(r.true_x),
                           format_number(r.mean_x), format_number(r.sd_x), format_number(r.mean_a),
                           format_number(r.sd_a), format_number(r.mean_b), format_number(r.sd_b),
                           format_number(r.ess), r.resampled ? 1 : 0, format_number(r.pr_failure),
                           format_number(r.hazard), r.actions);
    }
    return out;
}

std::string observations_csv(const CostBreakdown& episode, int n_modes) {
    std::string out = "time,kind,temperature";
    for (int m = 1; m <= n_modes; ++m) out += fmt::format(",lambda_{}", m);
    out += ",measured_state\n";

    struct Line {
        double time;
        std::string text;
    };
    std::vector<Line> lines;
    for (const auto& o : episode.shm_log) {
        std::string s = fmt::format("{},shm,{}", format_number(o.time), format_number(o.temperature));
        for (int m = 0; m < n_modes; ++m) {
            s += ',';
            if (static_cast<std::size_t>(m) < o.eigenvalues.size()) s += format_number(o.eigenvalues[static_cast<std::size_t>(m)]);
        }
        s += ",\n";
        lines.push_back({o.time, std::move(s)});
    }
    for (const auto& o : episode.inspection_log) {
        std::string s = fmt::format("{},inspection,", format_number(o.time));
        for (int m = 0; m < n_modes; ++m) s += ',';
        s += fmt::format(",{}\n", format_number(o.measured_state));
        lines.push_back({o.time, std::move(s)});
    }
    std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.time < b.time; });
    for (const auto& l : lines) out += l.text;
    return out;
}

std::string actions_csv(const CostBreakdown& episode) {
    std::string out = "time,kind,discounted_cost,value\n";
    for (const auto& a : episode.actions) {
        out += fmt::format("{},{},{},{}\n", format_number(a.time), to_string(a.kind), format_number(a.discounted_cost),
                           format_number(a.value));
    }
    return out;
}

std::string trajectories_csv(const std::string& branch, const CostBreakdown& episode) {
    std::string out = "branch,time,series,value\n";
    auto line = [&](double t, const char* series, double v) {
        out += fmt::format("{},{},{},{}\n", branch, format_number(t), series, format_number(v));
    };
    for (const auto& r : episode.trace) {
        line(r.time, "true_x", r.true_x);
        line(r.time, "mean_x", r.mean_x);
        line(r.time, "sd_x", r.sd_x);
        line(r.time, "pr_failure", r.pr_failure);
        line(r.time, "hazard", r.hazard);
    }
    for (const auto& t : episode.truth) {
        line(t.time, "interval_prob", t.interval_prob);
        line(t.time, "accumulated_failure", 1.0 - t.survival_before * (1.0 - t.interval_prob));
    }
    return out;
}

std::string surface_csv(const OptimizationResult& result) {
    std::string out = "p_th_I,p_th_R,dt_I,mean,se,n,degenerate\n";
    for (const auto& g : result.surface) {
        out += fmt::format("{},{},{},{},{},{},{}\n", format_number(g.policy.p_th_I), format_number(g.policy.p_th_R),
                           format_number(g.policy.delta_t_I), format_number(g.total.mean), format_number(g.total.se),
                           g.total.n, g.degenerate);
    }
    return out;
}

json estimate_json(const Estimate& e) {
    return {{"mean", number_or_null(e.mean, e.n > 0)}, {"se", number_or_null(e.se, e.n > 1)}, {"n", e.n}};
}

json cost_estimate_json(const CostEstimate& e) {
    const bool any = e.total.n > 0;
    const bool spread = e.total.n > 1;
    json doc;
    doc["n"] = e.total.n;
    doc["degenerate"] = e.degenerate;
    doc["mean"] = {{"C_I", number_or_null(e.inspection.mean, any)},
                   {"C_R", number_or_null(e.repair.mean, any)},
                   {"C_clsdn", number_or_null(e.closedown.mean, any)},
                   {"R_F", number_or_null(e.risk.mean, any)},
                   {"total", number_or_null(e.total.mean, any)}};
    doc["se"] = {{"C_I", number_or_null(e.inspection.se, spread)},
                 {"C_R", number_or_null(e.repair.se, spread)},
                 {"C_clsdn", number_or_null(e.closedown.se, spread)},
                 {"R_F", number_or_null(e.risk.se, spread)},
                 {"total", number_or_null(e.total.se, spread)}};
    return doc;
}

json policy_json(const PolicyHeuristics& p) {
    return {{"p_th_I", p.p_th_I}, {"p_th_R", p.p_th_R}, {"dt_I", std::isinf(p.delta_t_I) ? json("inf") : json(p.delta_t_I)}};
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out << content;
    out.flush();
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

}  // namespace voshm
