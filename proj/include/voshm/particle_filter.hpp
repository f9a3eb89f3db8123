#pragma once

#include <span>
#include <string>
#include <vector>

#include "voshm/deterioration.hpp"
#include "voshm/gaussian_mixture.hpp"
#include "voshm/observation.hpp"
#include "voshm/reliability.hpp"

namespace voshm {

struct FilterSettings {
    int n_particles = 1000;
    double ess_threshold = 0.5;  // resample when ESS < threshold * n_p
    int max_components = 3;
    EmSettings em;
    HazardConvention hazard_convention = HazardConvention::survival;

    void validate() const;
};

/**
 * Weighted particles over the augmented state (x, a, b) with the common time
 * since repair. Each particle also carries its accumulated log-survival
 * sum log(1 - p_m) along its own trajectory, and the interval failure
 * probability of the last prediction.
 */
struct ParticleEnsemble {
    std::vector<AugmentedState> states;
    std::vector<double> weights;
    std::vector<double> log_survival;
    std::vector<double> log_survival_prev;  // before the last prediction
    std::vector<double> last_interval_prob;
    double time = 0.0;

    std::size_t size() const { return states.size(); }
    double ess() const;

    double mean_x() const;
    double sd_x() const;
    double mean_a() const;
    double sd_a() const;
    double mean_b() const;
    double sd_b() const;
};

ParticleEnsemble init_ensemble(const DeteriorationParams& prior, int n_p, Rng& rng);

/// Advances every particle to t_to; weights unchanged. With a failure model,
/// each particle's interval failure probability for (time, t_to] is recorded
/// and added to its log-survival.
void predict(ParticleEnsemble& ensemble, double t_to, const DeteriorationParams& params, Rng& rng,
             ShockKnowledge knowledge = ShockKnowledge::unknown, const FailureModel* failure = nullptr);

/// Adds per-particle log-likelihoods to the weights and renormalizes.
/// Throws FilterDegeneracy when no particle keeps a finite weight.
void update(ParticleEnsemble& ensemble, std::span<const double> log_likelihoods);

void update_inspection(ParticleEnsemble& ensemble, const InspectionObservation& obs,
                       const ObservationSettings& settings);

/// Returns true when the surrogate had to clamp for some particle.
bool update_shm(ParticleEnsemble& ensemble, const ShmObservation& obs, const ThetaCurve& theta_pp,
                const ModalPredictor& predictor, double e0, double c_lambda);

double effective_sample_size(std::span<const double> weights);
double effective_sample_size(const ParticleEnsemble& ensemble);

struct ResampleOutcome {
    int components = 0;
    bool fallback = false;  // mixture fit failed, multinomial resampling with jitter used
};

/// Fits a mixture over (x, a, b), draws a fresh equally weighted ensemble,
/// clamps x >= 0 and a > 0. New particles share the weighted-mean accumulated
/// failure probability.
ResampleOutcome gm_resample(ParticleEnsemble& ensemble, int max_components, const EmSettings& em, Rng& rng);

/// Resets every particle to the undamaged state (repair), keeping a, b and weights.
void reset_after_repair(ParticleEnsemble& ensemble);

/// Accumulated failure probabilities and hazard of the last prediction.
struct PredictiveReliability {
    double pr_previous = 0.0;  // Pr(F_{k-1} | Z_{1:k-1})
    double pr_current = 0.0;   // Pr(F_k | Z_{1:k-1})
    double hazard = 0.0;       // over the predicted interval
};

PredictiveReliability predictive_reliability(const ParticleEnsemble& ensemble, HazardConvention convention);

/// Weighted mean of the particles' accumulated failure probabilities.
double filtered_failure_probability(const ParticleEnsemble& ensemble);

struct FilterTraceRow {
    double time = 0.0;
    double mean_x = 0.0, sd_x = 0.0;
    double mean_a = 0.0, sd_a = 0.0;
    double mean_b = 0.0, sd_b = 0.0;
    double ess = 0.0;
    bool resampled = false;
    double pr_failure = 0.0;
    double hazard = 0.0;
    double true_x = 0.0;
    std::string actions;
};

FilterTraceRow trace_row(const ParticleEnsemble& ensemble);

}  // namespace voshm
