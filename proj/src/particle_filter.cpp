#include "voshm/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

constexpr double a_floor = 1e-12;

template <class Get>
double weighted_mean(const ParticleEnsemble& e, Get get) {
    double m = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) m += e.weights[j] * get(e.states[j]);
    return m;
}

template <class Get>
double weighted_sd(const ParticleEnsemble& e, Get get) {
    const double m = weighted_mean(e, get);
    double v = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
        const double d = get(e.states[j]) - m;
        v += e.weights[j] * d * d;
    }
    return std::sqrt(std::max(v, 0.0));
}

constexpr auto get_x = [](const AugmentedState& s) { return s.x; };
constexpr auto get_a = [](const AugmentedState& s) { return s.a; };
constexpr auto get_b = [](const AugmentedState& s) { return s.b; };

}  // namespace

void FilterSettings::validate() const {
    if (n_particles < 100) throw ConfigError("must be at least 100", "filter.n_particles");
    if (!(ess_threshold > 0.0 && ess_threshold <= 1.0)) throw ConfigError("must lie in (0, 1]", "filter.ess_threshold");
    if (max_components < 1) throw ConfigError("must be at least 1", "filter.max_components");
    if (em.max_iterations < 1) throw ConfigError("must be at least 1", "filter.em_max_iterations");
}

double ParticleEnsemble::ess() const { return effective_sample_size(weights); }
double ParticleEnsemble::mean_x() const { return weighted_mean(*this, get_x); }
double ParticleEnsemble::sd_x() const { return weighted_sd(*this, get_x); }
double ParticleEnsemble::mean_a() const { return weighted_mean(*this, get_a); }
double ParticleEnsemble::sd_a() const { return weighted_sd(*this, get_a); }
double ParticleEnsemble::mean_b() const { return weighted_mean(*this, get_b); }
double ParticleEnsemble::sd_b() const { return weighted_sd(*this, get_b); }

ParticleEnsemble init_ensemble(const DeteriorationParams& prior, int n_p, Rng& rng) {
    if (n_p < 100) throw DomainError("an ensemble needs at least 100 particles");
    const auto n = static_cast<std::size_t>(n_p);
    ParticleEnsemble e;
    e.states.resize(n);
    for (auto& s : e.states) {
        s.x = 0.0;
        s.a = prior.a.sample(rng);
        s.b = prior.b.sample(rng);
        s.time_since_repair = 0.0;
    }
    e.weights.assign(n, 1.0 / static_cast<double>(n));
    e.log_survival.assign(n, 0.0);
    e.log_survival_prev.assign(n, 0.0);
    e.last_interval_prob.assign(n, 0.0);
    return e;
}

void predict(ParticleEnsemble& ensemble, double t_to, const DeteriorationParams& params, Rng& rng,
             ShockKnowledge knowledge, const FailureModel* failure) {
    const double t_from = ensemble.time;
    const double dt = t_to - t_from;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        ensemble.states[j] = transition_step(ensemble.states[j], t_from, t_to, params, rng, knowledge);
        if (failure != nullptr) {
            const double p = failure->interval_probability(ensemble.states[j].x, dt);
            ensemble.last_interval_prob[j] = p;
            ensemble.log_survival_prev[j] = ensemble.log_survival[j];
            ensemble.log_survival[j] += std::log1p(-p);
        }
    }
    ensemble.time = t_to;
}

void update(ParticleEnsemble& ensemble, std::span<const double> log_likelihoods) {
    if (log_likelihoods.size() != ensemble.size()) throw DomainError("one log-likelihood per particle is required");
    std::vector<double> lw(ensemble.size());
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        const double ll = std::isnan(log_likelihoods[j]) ? -std::numeric_limits<double>::infinity() : log_likelihoods[j];
        lw[j] = ensemble.weights[j] > 0.0 ? std::log(ensemble.weights[j]) + ll : -std::numeric_limits<double>::infinity();
        max_lw = std::max(max_lw, lw[j]);
    }
    if (!std::isfinite(max_lw)) {
        throw FilterDegeneracy(fmt::format("all particle weights vanished at t = {:.3f}", ensemble.time));
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        ensemble.weights[j] = std::exp(lw[j] - max_lw);
        sum += ensemble.weights[j];
    }
    for (double& w : ensemble.weights) w /= sum;
}

void update_inspection(ParticleEnsemble& ensemble, const InspectionObservation& obs,
                       const ObservationSettings& settings) {
    std::vector<double> ll(ensemble.size());
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        ll[j] = inspection_log_likelihood(obs, ensemble.states[j].x, settings);
    }
    update(ensemble, ll);
}

bool update_shm(ParticleEnsemble& ensemble, const ShmObservation& obs, const ThetaCurve& theta_pp,
                const ModalPredictor& predictor, double e0, double c_lambda) {
    const double e = theta_pp(obs.temperature) * e0;
    std::vector<double> predicted(static_cast<std::size_t>(predictor.n_modes()));
    std::vector<double> ll(ensemble.size());
    bool clamped = false;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        predictor.eigenvalues(ensemble.states[j].x, e, predicted);
        ll[j] = shm_log_likelihood_from_prediction(obs, predicted, c_lambda);
        clamped = clamped || !predictor.in_domain(ensemble.states[j].x, e);
    }
    update(ensemble, ll);
    return clamped;
}

double effective_sample_size(std::span<const double> weights) {
    double sum_sq = 0.0;
    for (double w : weights) sum_sq += w * w;
    return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

double effective_sample_size(const ParticleEnsemble& ensemble) { return ensemble.ess(); }

double filtered_failure_probability(const ParticleEnsemble& ensemble) {
    double p = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) p += ensemble.weights[j] * -std::expm1(ensemble.log_survival[j]);
    return p;
}

ResampleOutcome gm_resample(ParticleEnsemble& ensemble, int max_components, const EmSettings& em, Rng& rng) {
    const auto n = ensemble.size();
    const double pr = filtered_failure_probability(ensemble);
    double p_last = 0.0;
    for (std::size_t j = 0; j < n; ++j) p_last += ensemble.weights[j] * ensemble.last_interval_prob[j];

    Eigen::MatrixXd data(static_cast<Eigen::Index>(n), 3);
    for (std::size_t j = 0; j < n; ++j) {
        const auto r = static_cast<Eigen::Index>(j);
        data(r, 0) = ensemble.states[j].x;
        data(r, 1) = ensemble.states[j].a;
        data(r, 2) = ensemble.states[j].b;
    }

    ResampleOutcome outcome;
    std::vector<AugmentedState> fresh(n);
    const double tsr = ensemble.states.front().time_since_repair;
    try {
        const GaussianMixture gm = select_weighted_gmm(data, ensemble.weights, max_components, em, rng);
        outcome.components = gm.components();
        for (auto& s : fresh) {
            const Eigen::VectorXd v = gm.sample(rng);
            s = {std::max(v(0), 0.0), std::max(v(1), a_floor), v(2), tsr};
        }
    } catch (const NumericalError&) {
        outcome.fallback = true;
        const double jitter_x = 0.1 * ensemble.sd_x();
        const double jitter_a = 0.1 * ensemble.sd_a();
        const double jitter_b = 0.1 * ensemble.sd_b();
        std::discrete_distribution<std::size_t> pick(ensemble.weights.begin(), ensemble.weights.end());
        for (auto& s : fresh) {
            const auto& src = ensemble.states[pick(rng)];
            s = {std::max(src.x + jitter_x * standard_normal(rng), 0.0),
                 std::max(src.a + jitter_a * standard_normal(rng), a_floor),
                 src.b + jitter_b * standard_normal(rng), tsr};
        }
    }
    ensemble.states = std::move(fresh);
    ensemble.weights.assign(n, 1.0 / static_cast<double>(n));
    ensemble.log_survival.assign(n, std::log1p(-pr));
    ensemble.log_survival_prev.assign(n, std::log1p(-pr));
    ensemble.last_interval_prob.assign(n, p_last);
    return outcome;
}

void reset_after_repair(ParticleEnsemble& ensemble) {
    for (auto& s : ensemble.states) {
        s.x = 0.0;
        s.time_since_repair = 0.0;
    }
    std::fill(ensemble.log_survival.begin(), ensemble.log_survival.end(), 0.0);
    std::fill(ensemble.log_survival_prev.begin(), ensemble.log_survival_prev.end(), 0.0);
    std::fill(ensemble.last_interval_prob.begin(), ensemble.last_interval_prob.end(), 0.0);
}

PredictiveReliability predictive_reliability(const ParticleEnsemble& ensemble, HazardConvention convention) {
    PredictiveReliability r;
    double increment = 0.0;
    for (std::size_t j = 0; j < ensemble.size(); ++j) {
        const double w = ensemble.weights[j];
        const double p = ensemble.last_interval_prob[j];
        const double s_prev = ensemble.log_survival_prev[j];
        r.pr_previous += w * -std::expm1(s_prev);
        r.pr_current += w * -std::expm1(ensemble.log_survival[j]);
        increment += w * std::exp(s_prev) * p;
    }
    if (convention == HazardConvention::survival) {
        r.hazard = increment / (1.0 - r.pr_previous);
    } else {
        r.hazard = r.pr_previous > 0.0 ? increment / r.pr_previous : 0.0;
    }
    return r;
}

FilterTraceRow trace_row(const ParticleEnsemble& ensemble) {
    FilterTraceRow row;
    row.time = ensemble.time;
    row.mean_x = ensemble.mean_x();
    row.sd_x = ensemble.sd_x();
    row.mean_a = ensemble.mean_a();
    row.sd_a = ensemble.sd_a();
    row.mean_b = ensemble.mean_b();
    row.sd_b = ensemble.sd_b();
    row.ess = ensemble.ess();
    row.pr_failure = filtered_failure_probability(ensemble);
    return row;
}

}  // namespace voshm
