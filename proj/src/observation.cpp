#include "voshm/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void ObservationSettings::validate() const {
    if (!(c_lambda >= 0.0)) throw ConfigError("must be non-negative", "observation.c_lambda");
    if (!(cv_insp >= 0.0)) throw ConfigError("must be non-negative", "observation.cv_insp");
    if (!(sigma_floor >= 0.0)) throw ConfigError("must be non-negative", "observation.sigma_floor");
    if (modes_min < 3 || modes_min > 5) throw ConfigError("must lie in [3, 5]", "observation.modes_min");
    if (modes_max < modes_min || modes_max > 5) {
        throw ConfigError("must lie in [modes_min, 5]", "observation.modes_max");
    }
}

double ObservationSettings::inspection_sd(double x) const { return std::max(cv_insp * x, sigma_floor); }

ShmNoise ShmNoise::sample(int n_modes, Rng& rng) {
    ShmNoise noise;
    noise.xi.resize(static_cast<std::size_t>(n_modes));
    for (double& v : noise.xi) v = standard_normal(rng);
    noise.mode_draw = uniform01(rng);
    return noise;
}

ShmObservation shm_observation_from_noise(double time, double x_true, double t_celsius,
                                          const EnvParams& theta_true, const ModalPredictor& predictor,
                                          double e0, const ObservationSettings& settings,
                                          const ShmNoise& noise) {
    if (!(x_true >= 0.0)) throw DomainError("deterioration state must be non-negative");
    const int span = settings.modes_max - settings.modes_min + 1;
    const int n_identified = std::min(
        settings.modes_min + std::min(static_cast<int>(noise.mode_draw * span), span - 1), predictor.n_modes());
    if (static_cast<int>(noise.xi.size()) < n_identified) {
        throw DomainError("not enough noise draws for the identified modes");
    }

    std::vector<double> clean(static_cast<std::size_t>(predictor.n_modes()));
    predictor.eigenvalues(x_true, effective_youngs_modulus(theta_true, t_celsius, e0), clean);

    ShmObservation obs;
    obs.time = time;
    obs.temperature = t_celsius;
    obs.eigenvalues.resize(static_cast<std::size_t>(n_identified));
    for (std::size_t m = 0; m < obs.eigenvalues.size(); ++m) {
        obs.eigenvalues[m] = clean[m] * (1.0 + settings.c_lambda * noise.xi[m]);
        if (!(obs.eigenvalues[m] > 0.0)) {
            throw NumericalError(fmt::format("perturbed eigenvalue {} is not positive", m + 1));
        }
    }
    std::sort(obs.eigenvalues.begin(), obs.eigenvalues.end());
    return obs;
}

ShmObservation sample_shm_observation(double time, double x_true, double t_celsius,
                                      const EnvParams& theta_true, const ModalPredictor& predictor,
                                      double e0, const ObservationSettings& settings, Rng& rng) {
    try {
        return shm_observation_from_noise(time, x_true, t_celsius, theta_true, predictor, e0, settings,
                                          ShmNoise::sample(predictor.n_modes(), rng));
    } catch (const NumericalError&) {
        return shm_observation_from_noise(time, x_true, t_celsius, theta_true, predictor, e0, settings,
                                          ShmNoise::sample(predictor.n_modes(), rng));
    }
}

double shm_log_likelihood_from_prediction(const ShmObservation& obs, std::span<const double> predicted,
                                          double c_lambda) {
    const std::size_t n = std::min(obs.eigenvalues.size(), predicted.size());
    double ll = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        const double sd = c_lambda * obs.eigenvalues[m];
        const double z = (obs.eigenvalues[m] - predicted[m]) / sd;
        ll += -0.5 * z * z - std::log(sd) - half_log_2pi;
    }
    return ll;
}

ShmLikelihood shm_log_likelihood(const ShmObservation& obs, double x, const ThetaCurve& theta_pp,
                                 const ModalPredictor& predictor, double e0, double c_lambda) {
    const double e = theta_pp(obs.temperature) * e0;
    std::vector<double> predicted(static_cast<std::size_t>(predictor.n_modes()));
    predictor.eigenvalues(x, e, predicted);
    return {shm_log_likelihood_from_prediction(obs, predicted, c_lambda), !predictor.in_domain(x, e)};
}

InspectionObservation inspection_from_noise(double time, double x_true, const ObservationSettings& settings,
                                            double xi) {
    if (!(x_true >= 0.0)) throw DomainError("deterioration state must be non-negative");
    return {time, std::max(x_true + settings.inspection_sd(x_true) * xi, 0.0)};
}

InspectionObservation sample_inspection(double time, double x_true, const ObservationSettings& settings, Rng& rng) {
    return inspection_from_noise(time, x_true, settings, standard_normal(rng));
}

double inspection_log_likelihood(const InspectionObservation& obs, double x, const ObservationSettings& settings) {
    const double sd = settings.inspection_sd(x);
    const double z = (obs.measured_state - x) / sd;
    return -0.5 * z * z - std::log(sd) - half_log_2pi;
}

}  // namespace voshm
