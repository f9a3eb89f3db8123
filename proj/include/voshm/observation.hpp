#pragma once

#include <span>
#include <vector>

#include "voshm/environment.hpp"
#include "voshm/random.hpp"
#include "voshm/surrogate.hpp"

namespace voshm {

struct ObservationSettings {
    double c_lambda = 0.02;     // relative eigenvalue identification error
    double cv_insp = 0.15;      // inspection coefficient of variation
    double sigma_floor = 0.01;  // absolute inspection sd floor
    int modes_min = 5;          // identified modes per SHM observation
    int modes_max = 5;

    void validate() const;
    double inspection_sd(double x) const;
};

struct ShmObservation {
    double time = 0.0;
    double temperature = 0.0;
    std::vector<double> eigenvalues;  // ascending, (rad/s)^2
};

struct InspectionObservation {
    double time = 0.0;
    double measured_state = 0.0;
};

/// Standard normal draws behind one SHM observation, so that paired branches
/// can share them. `mode_draw` in [0, 1) selects the identified mode count.
struct ShmNoise {
    std::vector<double> xi;
    double mode_draw = 0.0;

    static ShmNoise sample(int n_modes, Rng& rng);
};

/// Identified eigenvalues lambda_G(x, theta(T) E0) (1 + c xi), lowest modes kept,
/// sorted ascending. Throws NumericalError on a non-positive perturbed value.
ShmObservation shm_observation_from_noise(double time, double x_true, double t_celsius,
                                          const EnvParams& theta_true, const ModalPredictor& predictor,
                                          double e0, const ObservationSettings& settings,
                                          const ShmNoise& noise);

/// Draws fresh noise; a non-positive perturbed eigenvalue is redrawn once.
ShmObservation sample_shm_observation(double time, double x_true, double t_celsius,
                                      const EnvParams& theta_true, const ModalPredictor& predictor,
                                      double e0, const ObservationSettings& settings, Rng& rng);

/// Sum over identified modes of Normal(obs - pred; 0, (c obs)^2) log-densities,
/// with `predicted` the model eigenvalues at the particle state.
double shm_log_likelihood_from_prediction(const ShmObservation& obs, std::span<const double> predicted,
                                          double c_lambda);

struct ShmLikelihood {
    double log_density = 0.0;
    bool out_of_domain = false;
};

ShmLikelihood shm_log_likelihood(const ShmObservation& obs, double x, const ThetaCurve& theta_pp,
                                 const ModalPredictor& predictor, double e0, double c_lambda);

/// max(x_true + eps, 0), eps ~ Normal(0, max(cv x_true, floor)^2) with eps = sd * xi.
InspectionObservation inspection_from_noise(double time, double x_true, const ObservationSettings& settings,
                                            double xi);
InspectionObservation sample_inspection(double time, double x_true, const ObservationSettings& settings, Rng& rng);

/// Normal log-density of the measured state with mean x and sd max(cv x, floor).
double inspection_log_likelihood(const InspectionObservation& obs, double x, const ObservationSettings& settings);

}  // namespace voshm
