#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "voshm/random.hpp"
#include "voshm/surrogate.hpp"
#include "voshm/tmcmc.hpp"

namespace voshm {

/**
 * Parameters of the temperature-dependent modulus factor
 *
 *   theta(T) = slope * T + intercept + step_size * (1 - erf((T - center) / width)).
 *
 * The slope is the small linear temperature coefficient (1/C) and the
 * intercept the near-unity level. README explains how they relate to the
 * Q and H labels.
 */
struct EnvParams {
    double slope = -0.005;             // 1/C
    double intercept = 1.115;          // -
    double step_size = 0.165;          // U
    double transition_center = -1.0;   // Y, C
    double transition_width = 3.0;     // tau, C

    static constexpr int dim = 5;
    std::array<double, dim> to_array() const;
    static EnvParams from_array(const std::array<double, dim>& v);

    bool valid() const;
};

double theta_of_temperature(const EnvParams& params, double t_celsius);
/// d theta / dT.
double theta_derivative(const EnvParams& params, double t_celsius);
/// E(T) = theta(T) E_0. Throws DomainError when theta(T) <= 0.
double effective_youngs_modulus(const EnvParams& params, double t_celsius, double e0);

/// Independent normal priors of the five parameters.
struct EnvPrior {
    std::array<NormalSpec, EnvParams::dim> marginals{
        NormalSpec{-0.005, 0.1}, NormalSpec{1.115, 0.025}, NormalSpec{0.165, 0.1},
        NormalSpec{-1.00, 0.25}, NormalSpec{3.00, 0.20}};

    EnvParams mean() const;
    /// Draws until the transition width is positive.
    EnvParams sample(Rng& rng) const;
    /// -inf outside the support (non-positive width).
    double log_density(const EnvParams& params) const;
    std::array<double, EnvParams::dim> sd() const;
};

/// Sinusoidal annual cycle plus Gaussian noise.
struct TemperatureModel {
    double mean = 9.0;        // C
    double amplitude = 15.0;  // C
    double phase = 0.33;      // years
    double noise_sd = 4.0;    // C

    double deterministic(double time_years) const;
    double sample(double time_years, Rng& rng) const;
};

double sample_ambient_temperature(const TemperatureModel& model, double time_years, Rng& rng);

struct ModalRecord {
    double temperature = 0.0;          // C
    std::vector<double> eigenvalues;   // (rad/s)^2
};

struct UndamagedModalDataset {
    std::vector<ModalRecord> records;

    /// True when records exist on both sides of 0 C.
    bool spans_freezing() const;
};

/// Eigenvalue sets at x = 0 for random temperatures within the first year,
/// perturbed multiplicatively: lambda * (1 + c_lambda * xi).
UndamagedModalDataset synthesize_undamaged_dataset(const EnvParams& truth, const ModalPredictor& predictor,
                                                   double e0, int n_t, double c_lambda,
                                                   const TemperatureModel& temperature, Rng& rng);

/// Sum over records and modes of Normal(obs - pred; 0, (c_lambda * obs)^2) log-densities.
double env_log_likelihood(const UndamagedModalDataset& data, const EnvParams& params,
                          const ModalPredictor& predictor, double e0, double c_lambda);

struct EnvPosterior {
    std::vector<EnvParams> samples;
    std::vector<double> weights;
    EnvParams mean;
    std::array<double, EnvParams::dim> sd{};
    int stages = 0;
    double acceptance_rate = 0.0;
    double log_evidence = 0.0;

    nlohmann::json to_json() const;
    static EnvPosterior from_json(const nlohmann::json& doc);
};

EnvPosterior learn_env_posterior(const UndamagedModalDataset& data, const EnvPrior& prior,
                                 const ModalPredictor& predictor, double e0, double c_lambda,
                                 const TmcmcSettings& settings, Rng& rng);

/// theta''(T): the modulus factor evaluated at fixed (posterior-mean) parameters.
class ThetaCurve {
public:
    ThetaCurve() = default;
    explicit ThetaCurve(EnvParams params) : params_(params) {}

    double operator()(double t_celsius) const { return theta_of_temperature(params_, t_celsius); }
    const EnvParams& params() const noexcept { return params_; }

private:
    EnvParams params_;
};

ThetaCurve posterior_theta_curve(const EnvPosterior& posterior);

nlohmann::json env_params_to_json(const EnvParams& p);
EnvParams env_params_from_json(const nlohmann::json& j);

}  // namespace voshm
