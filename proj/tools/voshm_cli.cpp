// voshm: batch front-end for environmental learning, surrogate fitting,
// episode replay and the Monte Carlo value-of-monitoring studies.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include <fmt/format.h>

#include "voshm/config.hpp"
#include "voshm/errors.hpp"
#include "voshm/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace voshm;

namespace {

enum ExitCode { ok = 0, config_error = 2, prerequisite_error = 3, io_error = 4, estimation_error = 5 };

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_mcs;
    std::optional<int> n_p;
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<int> case_number;
    std::optional<std::string> mode;
    std::vector<std::uint64_t> traces;
};

void add_common(CLI::App& cmd, Overrides& o) {
    cmd.add_option("--config", o.config, "INI or JSON configuration file");
    cmd.add_option("--seed", o.seed, "master seed");
    cmd.add_option("--n-mcs", o.n_mcs, "Monte Carlo scenarios");
    cmd.add_option("--n-p", o.n_p, "particles per filter");
    cmd.add_option("--workers", o.workers, "worker threads");
    cmd.add_option("--out", o.out, "output directory");
    cmd.add_option("--case", o.case_number, "case study preset")->check(CLI::Range(1, 4));
    cmd.add_option("--mode", o.mode, "inspection-only | shm | prior");
    cmd.add_option("--trace", o.traces, "scenario ids whose traces are written");
}

RunConfig resolve(const Overrides& o) {
    RunConfig c = o.config.empty() ? parse_config("", ConfigFormat::ini) : load_config(o.config);
    if (o.seed) c.mc.seed = *o.seed;
    if (o.n_mcs) c.mc.n_mcs = *o.n_mcs;
    if (o.n_p) c.mc.n_p = *o.n_p;
    if (o.workers) c.mc.workers = *o.workers;
    if (o.out) c.output.dir = *o.out;
    if (o.case_number) c.set_case(*o.case_number);
    if (o.mode) c.mode = parse_mode(*o.mode);
    if (!o.traces.empty()) c.output.traces = o.traces;
    c.filter.n_particles = c.mc.n_p;
    c.validate();
    return c;
}

fs::path out_dir(const RunConfig& c) { return fs::path(c.output.dir); }

void echo_config(const RunConfig& c) { write_text(out_dir(c) / "resolved_config.ini", to_ini(c)); }

json case_json(const RunConfig& c) {
    json doc;
    doc["number"] = c.case_number;
    doc["shock_observability"] = c.case_config.shocks == ShockObservability::observed ? "observed" : "unobserved";
    doc["closedown"] = c.case_config.closedown;
    doc["imposed_repair_threshold"] =
        c.case_config.imposed_repair_threshold ? json(*c.case_config.imposed_repair_threshold) : json(nullptr);
    return doc;
}

json run_header(const RunConfig& c, const std::string& command) {
    return {{"command", command},
            {"seed", c.mc.seed},
            {"n_mcs", c.mc.n_mcs},
            {"n_p", c.mc.n_p},
            {"env_learning", to_string(c.env_learning.mode)},
            {"case", case_json(c)}};
}

json paired_json(const PairedEstimate& p, const std::string& baseline, const std::string& alternative) {
    json doc;
    doc["branches"] = {{baseline, cost_estimate_json(p.baseline)}, {alternative, cost_estimate_json(p.alternative)}};
    doc["difference"] = estimate_json(p.difference);
    doc["excluded"] = p.excluded;
    return doc;
}

// Per-episode artifacts of one branch of one scenario.
void write_episode(const fs::path& dir, const std::string& stem, const std::string& branch, const CostBreakdown& c,
                   int n_modes) {
    const std::string suffix = fmt::format("{}_{}", stem, branch);
    write_text(dir / fmt::format("trace_{}.csv", suffix), trace_csv(c));
    write_text(dir / fmt::format("observations_{}.csv", suffix), observations_csv(c, n_modes));
    write_text(dir / fmt::format("actions_{}.csv", suffix), actions_csv(c));
    write_text(dir / fmt::format("trajectories_{}.csv", suffix), trajectories_csv(branch, c));
}

void write_traces(const RunConfig& c, const StudyContext& ctx,
                  const std::vector<std::pair<Mode, PolicyHeuristics>>& branches) {
    for (std::uint64_t id : c.output.traces) {
        if (id >= static_cast<std::uint64_t>(c.mc.n_mcs)) {
            throw ConfigError(fmt::format("scenario {} is outside [0, n_mcs)", id), "output.traces");
        }
        const EpisodeScenario scenario = make_episode_scenario(ctx, c.mc.seed, id);
        const ThetaCurve theta = learn_scenario_theta(ctx, scenario);
        for (const auto& [mode, policy] : branches) {
            Rng rng = make_rng(c.mc.seed, id, StreamId::filter);
            const CostBreakdown episode =
                simulate_episode(scenario, theta, mode, policy, c.case_config, ctx, rng, {.record_trace = true});
            write_episode(out_dir(c), std::to_string(id), to_string(mode), episode, ctx.predictor->n_modes());
        }
    }
}

int cmd_learn_env(const RunConfig& c) {
    echo_config(c);
    const StudyContext ctx = build_context(c);
    Rng env_rng = make_rng(c.mc.seed, 0, StreamId::environment);
    const EnvParams truth = c.env_prior.sample(env_rng);
    const UndamagedModalDataset data = synthesize_undamaged_dataset(
        truth, *ctx.predictor, ctx.e0, c.env_learning.n_t, c.observation.c_lambda, c.temperature, env_rng);
    Rng learn_rng = make_rng(c.mc.seed, 0, StreamId::learning);
    const EnvPosterior posterior = learn_env_posterior(data, c.env_prior, *ctx.predictor, ctx.e0,
                                                       c.observation.c_lambda, c.env_learning.tmcmc, learn_rng);
    json doc = posterior.to_json();
    doc["truth"] = env_params_to_json(truth);
    write_json(out_dir(c) / "env_posterior.json", doc);

    std::string dataset = "temperature";
    for (int m = 1; m <= ctx.predictor->n_modes(); ++m) dataset += fmt::format(",lambda_{}", m);
    dataset += '\n';
    for (const auto& r : data.records) {
        dataset += format_number(r.temperature);
        for (double v : r.eigenvalues) dataset += "," + format_number(v);
        dataset += '\n';
    }
    write_text(out_dir(c) / "env_dataset.csv", dataset);

    const ThetaCurve theta = posterior_theta_curve(posterior);
    std::string curve = "temperature,theta_true,theta_posterior_mean\n";
    for (int t = -15; t <= 35; ++t) {
        curve += fmt::format("{},{},{}\n", t, format_number(theta_of_temperature(truth, t)), format_number(theta(t)));
    }
    write_text(out_dir(c) / "theta_curve.csv", curve);

    json summary = run_header(c, "learn-env");
    summary["truth"] = env_params_to_json(truth);
    summary["posterior_mean"] = env_params_to_json(posterior.mean);
    summary["posterior_sd"] = posterior.sd;
    summary["stages"] = posterior.stages;
    summary["acceptance_rate"] = posterior.acceptance_rate;
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("posterior mean theta(20 C) = {:.5f}, truth {:.5f}, {} stages\n", theta(20.0),
               theta_of_temperature(truth, 20.0), posterior.stages);
    return ok;
}

int cmd_fit_surrogate(const RunConfig& c) {
    echo_config(c);
    const BridgeModel model(c.bridge);
    const SurrogateGrid grid = default_surrogate_grid(c.bridge);
    const ModalSurrogate surrogate = fit_surrogate(model, grid.x, grid.e, c.bridge.n_modes, c.surrogate);
    write_json(out_dir(c) / "surrogate.json", surrogate.to_json());

    // Held-out check on cell midpoints of the fit grid (finite x only).
    double worst = 0.0;
    std::string report = "x,e_Pa,mode,f_fe_Hz,f_surrogate_Hz,relative_error\n";
    for (std::size_t i = 0; i + 1 < grid.x.size(); ++i) {
        if (!std::isfinite(grid.x[i + 1])) continue;
        for (std::size_t j = 0; j + 1 < grid.e.size(); ++j) {
            const double x = 0.5 * (grid.x[i] + grid.x[i + 1]);
            const double e = std::sqrt(grid.e[j] * grid.e[j + 1]);
            const auto fe = model.modal_analysis(x, e, c.bridge.n_modes).frequencies();
            const auto sg = surrogate.predict(x, e).frequencies();
            for (std::size_t m = 0; m < fe.size(); ++m) {
                const double err = std::abs(sg[m] - fe[m]) / fe[m];
                worst = std::max(worst, err);
                report += fmt::format("{},{},{},{},{},{}\n", format_number(x), format_number(e), m + 1,
                                      format_number(fe[m]), format_number(sg[m]), format_number(err));
            }
        }
    }
    write_text(out_dir(c) / "surrogate_check.csv", report);
    json summary = run_header(c, "fit-surrogate");
    summary["degree"] = surrogate.degree();
    summary["max_relative_frequency_error"] = worst;
    summary["undamaged_frequencies_Hz"] = model.modal_analysis(0.0, c.bridge.nominal_youngs_modulus).frequencies();
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("surrogate written, held-out max frequency error {:.4f}%\n", 100.0 * worst);
    return ok;
}

int cmd_replay(const RunConfig& c, const std::string& scenario_path, std::uint64_t index) {
    echo_config(c);
    const StudyContext ctx = build_context(c);
    EpisodeScenario scenario;
    if (scenario_path.empty()) {
        scenario = make_episode_scenario(ctx, c.mc.seed, index);
        write_json(out_dir(c) / fmt::format("scenario_{}.json", index), scenario.deterioration.to_json());
    } else {
        std::ifstream in(scenario_path);
        if (!in) throw PrerequisiteError(fmt::format("scenario '{}' not found", scenario_path));
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& ex) {
            throw PrerequisiteError(fmt::format("scenario '{}' is not valid JSON: {}", scenario_path, ex.what()));
        }
        scenario = episode_from_deterioration(ctx, DeteriorationScenario::from_json(doc), c.mc.seed, index);
    }
    const ThetaCurve theta = c.mode == Mode::shm ? learn_scenario_theta(ctx, scenario) : ThetaCurve(scenario.env_truth);
    const PolicyHeuristics policy = c.mode == Mode::shm ? c.shm_policy() : c.policy;
    Rng rng = make_rng(c.mc.seed, index, StreamId::filter);
    const CostBreakdown episode = simulate_episode(scenario, theta, c.mode, policy, c.case_config, ctx, rng, {.record_trace = true});
    write_episode(out_dir(c), std::to_string(index), to_string(c.mode), episode, ctx.predictor->n_modes());

    json summary = run_header(c, "replay");
    summary["mode"] = to_string(c.mode);
    summary["policy"] = policy_json(policy);
    summary["scenario_index"] = index;
    summary["costs"] = {{"C_I", episode.inspection}, {"C_R", episode.repair}, {"C_clsdn", episode.closedown},
                        {"R_F", episode.risk}, {"total", episode.total()}};
    summary["counts"] = {{"inspections", episode.count(ActionKind::inspection)},
                         {"repairs", episode.count(ActionKind::repair)},
                         {"closedowns", episode.count(ActionKind::closedown)},
                         {"shocks", episode.count(ActionKind::shock)}};
    summary["resamples"] = episode.resamples;
    summary["resample_fallbacks"] = episode.resample_fallbacks;
    summary["degenerate"] = episode.degenerate;
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("{} episode {}: total {:.4e} (C_I {:.4e}, C_R {:.4e}, C_clsdn {:.4e}, R_F {:.4e})\n", to_string(c.mode),
               index, episode.total(), episode.inspection, episode.repair, episode.closedown, episode.risk);
    return episode.degenerate ? estimation_error : ok;
}

int cmd_voshm(const RunConfig& c) {
    echo_config(c);
    const StudyContext ctx = build_context(c);
    const PairedEstimate est = voshm_estimate(c.policy, c.shm_policy(), c.case_config, ctx, c.study_options());
    std::vector<EpisodeRow> rows = est.baseline.rows;
    rows.insert(rows.end(), est.alternative.rows.begin(), est.alternative.rows.end());
    std::stable_sort(rows.begin(), rows.end(), [](const EpisodeRow& a, const EpisodeRow& b) { return a.scenario < b.scenario; });
    write_text(out_dir(c) / "episodes.csv", episodes_csv(rows));
    write_traces(c, ctx, {{Mode::inspection_only, c.policy}, {Mode::shm, c.shm_policy()}});

    json summary = run_header(c, "voshm");
    summary["policy_inspection"] = policy_json(c.policy);
    summary["policy_shm"] = policy_json(c.shm_policy());
    summary.update(paired_json(est, "inspection-only", "shm"));
    summary["voshm"] = estimate_json(est.difference);
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("VoSHM = {:.4e} +/- {:.2e} (n = {}, excluded {})\n", est.difference.mean, est.difference.se,
               est.difference.n, est.excluded);
    return ok;
}

int cmd_voi(const RunConfig& c) {
    if (c.mode == Mode::prior) throw ConfigError("the data branch of a VoI study cannot be 'prior'", "case.mode");
    echo_config(c);
    const StudyContext ctx = build_context(c);
    const PolicyHeuristics posterior_policy = c.mode == Mode::shm ? c.shm_policy() : c.policy;
    const PairedEstimate est = voi_estimate(c.policy, posterior_policy, c.mode, c.case_config, ctx, c.study_options());
    std::vector<EpisodeRow> rows = est.baseline.rows;
    rows.insert(rows.end(), est.alternative.rows.begin(), est.alternative.rows.end());
    std::stable_sort(rows.begin(), rows.end(), [](const EpisodeRow& a, const EpisodeRow& b) { return a.scenario < b.scenario; });
    write_text(out_dir(c) / "episodes.csv", episodes_csv(rows));
    write_traces(c, ctx, {{Mode::prior, c.policy}, {c.mode, posterior_policy}});

    json summary = run_header(c, "voi");
    summary["mode"] = to_string(c.mode);
    summary["policy_prior"] = policy_json(c.policy);
    summary["policy_posterior"] = policy_json(posterior_policy);
    summary.update(paired_json(est, "prior", to_string(c.mode)));
    summary["voi"] = estimate_json(est.difference);
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("VoI ({}) = {:.4e} +/- {:.2e} (n = {})\n", to_string(c.mode), est.difference.mean, est.difference.se,
               est.difference.n);
    return ok;
}

int cmd_optimize(const RunConfig& c) {
    if (c.mode == Mode::prior) throw ConfigError("optimize supports inspection-only and shm", "case.mode");
    echo_config(c);
    const StudyContext ctx = build_context(c);
    const std::vector<double> grid = log_grid(c.optimize.p_min, c.optimize.p_max, c.optimize.points);
    const double dt_I = c.mode == Mode::shm ? c.shm_dt_I : c.policy.delta_t_I;
    const OptimizationResult result =
        optimize_heuristics(c.mode, grid, grid, dt_I, c.case_config, ctx, c.study_options());
    write_text(out_dir(c) / "cost_surface.csv", surface_csv(result));

    json summary = run_header(c, "optimize");
    summary["mode"] = to_string(c.mode);
    summary["grid"] = grid;
    summary["best"] = policy_json(result.best);
    summary["best_total"] = estimate_json(result.best_total);
    summary["grid_points"] = result.surface.size();
    if (c.optimize.search_shm && c.mode == Mode::inspection_only) {
        // Second search for the SHM branch on the same scenarios.
        const OptimizationResult shm =
            optimize_heuristics(Mode::shm, grid, grid, c.shm_dt_I, c.case_config, ctx, c.study_options());
        write_text(out_dir(c) / "cost_surface_shm.csv", surface_csv(shm));
        summary["best_shm"] = policy_json(shm.best);
        summary["best_total_shm"] = estimate_json(shm.best_total);
        fmt::print("best SHM w = [{:.3e}, {}, {:.3e}], E[C] = {:.4e} +/- {:.2e}\n", shm.best.p_th_I,
                   format_number(shm.best.delta_t_I), shm.best.p_th_R, shm.best_total.mean, shm.best_total.se);
    }
    write_json(out_dir(c) / "summary.json", summary);
    fmt::print("best w = [{:.3e}, {}, {:.3e}], E[C] = {:.4e} +/- {:.2e}\n", result.best.p_th_I,
               format_number(result.best.delta_t_I), result.best.p_th_R, result.best_total.mean, result.best_total.se);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Value of structural health monitoring by preposterior Monte Carlo simulation"};
    app.require_subcommand(1);

    Overrides o;
    std::string scenario_path;
    std::uint64_t index = 0;
    auto* learn = app.add_subcommand("learn-env", "learn the temperature-modulus model from undamaged data");
    auto* fit = app.add_subcommand("fit-surrogate", "fit and export the modal surrogate");
    auto* replay = app.add_subcommand("replay", "run one episode and write its traces");
    auto* voshm = app.add_subcommand("voshm", "paired value-of-SHM study");
    auto* voi = app.add_subcommand("voi", "paired value-of-information study against the prior analysis");
    auto* optimize = app.add_subcommand("optimize", "grid search of the heuristic thresholds");
    for (auto* cmd : {learn, fit, replay, voshm, voi, optimize}) add_common(*cmd, o);
    replay->add_option("--scenario", scenario_path, "stored scenario JSON (default: draw from seed and index)");
    replay->add_option("--index", index, "scenario index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    try {
        const RunConfig c = resolve(o);
        if (*learn) return cmd_learn_env(c);
        if (*fit) return cmd_fit_surrogate(c);
        if (*replay) return cmd_replay(c, scenario_path, index);
        if (*voshm) return cmd_voshm(c);
        if (*voi) return cmd_voi(c);
        if (*optimize) return cmd_optimize(c);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const PrerequisiteError& e) {
        std::cerr << "missing prerequisite: " << e.what() << '\n';
        return prerequisite_error;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const Error& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return estimation_error;
    }
    return ok;
}
