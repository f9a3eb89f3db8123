#include "voshm/tmcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

// Coefficient of variation of exp(delta * (loglik - max)).
double weight_cov(const std::vector<double>& loglik, double max_ll, double delta) {
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double ll : loglik) {
        const double w = std::exp(delta * (ll - max_ll));
        sum += w;
        sum_sq += w * w;
    }
    const double n = static_cast<double>(loglik.size());
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0);
    return std::sqrt(var) / mean;
}

std::vector<std::size_t> systematic_resample(const std::vector<double>& weights, std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    const double step = 1.0 / static_cast<double>(n);
    double u = uniform01(rng) * step;
    double cumulative = weights[0];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (u > cumulative && j + 1 < weights.size()) {
            cumulative += weights[++j];
        }
        idx[i] = j;
        u += step;
    }
    return idx;
}

}  // namespace

TmcmcResult run_tmcmc(const PriorSamplerFn& sample_prior, const LogDensityFn& log_prior,
                      const LogDensityFn& log_likelihood, int dim, const TmcmcSettings& settings,
                      Rng& rng) {
    const auto n = static_cast<std::size_t>(settings.n_samples);
    if (n < 2 || dim < 1) {
        throw InferenceError("sampler needs at least two samples and one dimension");
    }

    std::vector<Eigen::VectorXd> theta(n);
    std::vector<double> loglik(n);
    std::vector<double> logprior(n);
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] = sample_prior(rng);
        logprior[i] = log_prior(theta[i]);
        loglik[i] = log_likelihood(theta[i]);
    }

    TmcmcResult result;
    result.betas.push_back(0.0);
    double beta = 0.0;
    double scale = 2.38 / std::sqrt(static_cast<double>(dim));
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    long accepted_total = 0;
    long proposed_total = 0;

    while (beta < 1.0) {
        if (result.stages >= settings.max_stages) {
            throw InferenceError(fmt::format("tempering did not reach beta = 1 within {} stages (beta = {:.4g})",
                                             settings.max_stages, beta));
        }
        const double max_ll = *std::max_element(loglik.begin(), loglik.end());
        if (!std::isfinite(max_ll)) {
            throw InferenceError("log-likelihood is not finite for any sample");
        }

        double delta = 1.0 - beta;
        if (weight_cov(loglik, max_ll, delta) > settings.target_cov) {
            double lo = 0.0;
            double hi = delta;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (weight_cov(loglik, max_ll, mid) > settings.target_cov) hi = mid;
                else lo = mid;
                if (hi - lo < 1e-14 * std::max(hi, 1e-300)) break;
            }
            delta = lo > 0.0 ? lo : hi;
        }
        const double next_beta = std::min(1.0, beta + delta);
        delta = next_beta - beta;

        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] = std::exp(delta * (loglik[i] - max_ll));
            sum += weights[i];
        }
        for (double& w : weights) w /= sum;
        result.log_evidence += std::log(sum / static_cast<double>(n)) + delta * max_ll;

        double sum_sq = 0.0;
        for (double w : weights) sum_sq += w * w;
        const double ess = 1.0 / sum_sq;
        if (ess < 1.0 + 1e-9) {
            throw InferenceError(fmt::format(
                "sampler degeneracy at stage {} (beta {:.4g} -> {:.4g}): all weight on one sample",
                result.stages + 1, beta, next_beta));
        }

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
        for (std::size_t i = 0; i < n; ++i) mean += weights[i] * theta[i];
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd d = theta[i] - mean;
            cov += weights[i] * d * d.transpose();
        }
        cov.diagonal().array() += 1e-14 * std::max(cov.trace(), 1e-300);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw InferenceError("proposal covariance is not positive definite");
        }
        const Eigen::MatrixXd chol = llt.matrixL();

        beta = next_beta;
        result.betas.push_back(beta);
        ++result.stages;

        const auto seeds = systematic_resample(weights, n, rng);
        std::vector<Eigen::VectorXd> next_theta(n);
        std::vector<double> next_ll(n);
        std::vector<double> next_lp(n);
        long accepted = 0;
        long proposed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::VectorXd current = theta[seeds[i]];
            double current_ll = loglik[seeds[i]];
            double current_lp = logprior[seeds[i]];
            for (int step = 0; step < settings.mcmc_steps; ++step) {
                Eigen::VectorXd z(dim);
                for (int k = 0; k < dim; ++k) z(k) = standard_normal(rng);
                const Eigen::VectorXd candidate = current + scale * (chol * z);
                const double cand_lp = log_prior(candidate);
                ++proposed;
                if (!std::isfinite(cand_lp)) continue;
                const double cand_ll = log_likelihood(candidate);
                const double log_ratio = (cand_lp + beta * cand_ll) - (current_lp + beta * current_ll);
                if (std::log(uniform01(rng)) < log_ratio) {
                    current = candidate;
                    current_ll = cand_ll;
                    current_lp = cand_lp;
                    ++accepted;
                }
            }
            next_theta[i] = std::move(current);
            next_ll[i] = current_ll;
            next_lp[i] = current_lp;
        }
        theta = std::move(next_theta);
        loglik = std::move(next_ll);
        logprior = std::move(next_lp);
        std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));

        const double rate = proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
        scale *= std::exp(rate - settings.target_acceptance);
        accepted_total += accepted;
        proposed_total += proposed;
    }

    result.samples.resize(static_cast<Eigen::Index>(n), dim);
    for (std::size_t i = 0; i < n; ++i) result.samples.row(static_cast<Eigen::Index>(i)) = theta[i].transpose();
    result.weights = weights;
    result.acceptance_rate = proposed_total > 0
                                 ? static_cast<double>(accepted_total) / static_cast<double>(proposed_total)
                                 : 0.0;
    return result;
}

}  // namespace voshm
