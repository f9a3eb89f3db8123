#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "voshm/random.hpp"

namespace voshm {

struct GaussianComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct EmSettings {
    int max_iterations = 50;
    double tolerance = 1e-6;       // relative change of the weighted log-likelihood
    double regularization = 1e-10; // times the covariance trace, added to the diagonal
};

/**
 * Gaussian mixture fitted to weighted samples.
 *
 * Fitting works in coordinates standardized by the weighted mean and sd.
 * Coordinates without weighted spread are not modeled and are reproduced
 * exactly by sample().
 */
class GaussianMixture {
public:
    int dim() const { return static_cast<int>(center_.size()); }
    int components() const { return static_cast<int>(components_.size()); }
    int modeled_dims() const { return static_cast<int>(free_.size()); }

    /// Components in the original coordinates (fixed coordinates get zero variance).
    std::vector<GaussianComponent> original_components() const;

    Eigen::VectorXd sample(Rng& rng) const;

    double log_likelihood = 0.0;  // weighted, per unit total weight
    double bic = 0.0;
    int iterations = 0;
    bool converged = false;

private:
    friend GaussianMixture fit_weighted_gmm(const Eigen::MatrixXd&, std::span<const double>, int,
                                            const EmSettings&, Rng&);

    Eigen::VectorXd center_;
    Eigen::VectorXd scale_;
    std::vector<int> free_;  // modeled coordinates
    std::vector<GaussianComponent> components_;  // standardized, over free_
    std::vector<Eigen::MatrixXd> chol_;
};

/// Weighted EM with k components. Rows of `data` are samples; weights need not be normalized.
/// Throws NumericalError when the fit breaks down (non-finite likelihood, indefinite covariance).
GaussianMixture fit_weighted_gmm(const Eigen::MatrixXd& data, std::span<const double> weights, int k,
                                 const EmSettings& settings, Rng& rng);

/// Fits k = 1..max_components and keeps the lowest weighted BIC, where the
/// sample count is the effective sample size of the weights.
GaussianMixture select_weighted_gmm(const Eigen::MatrixXd& data, std::span<const double> weights,
                                    int max_components, const EmSettings& settings, Rng& rng);

}  // namespace voshm
