#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "voshm/random.hpp"

namespace voshm {

struct TmcmcSettings {
    int n_samples = 1000;
    /// Target coefficient of variation of the incremental weights per stage.
    double target_cov = 1.0;
    /// Metropolis steps per chain and stage.
    int mcmc_steps = 5;
    /// Target acceptance rate for the adaptive proposal scale.
    double target_acceptance = 0.234;
    int max_stages = 200;
};

struct TmcmcResult {
    Eigen::MatrixXd samples;      // n_samples x dim
    std::vector<double> weights;  // normalized
    std::vector<double> betas;    // tempering schedule, ends at 1
    double log_evidence = 0.0;
    double acceptance_rate = 0.0;
    int stages = 0;
};

using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;
using PriorSamplerFn = std::function<Eigen::VectorXd(Rng&)>;

/**
 * Transitional MCMC: tempers the likelihood from the prior to the posterior,
 * choosing each increment so the incremental weights keep a target cv,
 * resampling, then moving every resampled seed with a few Metropolis steps
 * under the current tempered target. The proposal is Gaussian with the
 * weighted sample covariance times an adaptively tuned scale.
 *
 * Throws InferenceError when the weights of a stage collapse onto one sample.
 */
TmcmcResult run_tmcmc(const PriorSamplerFn& sample_prior, const LogDensityFn& log_prior,
                      const LogDensityFn& log_likelihood, int dim, const TmcmcSettings& settings,
                      Rng& rng);

}  // namespace voshm
