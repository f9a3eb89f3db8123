#include "voshm/gaussian_mixture.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

constexpr double absolute_floor = 1e-12;

struct Factor {
    Eigen::MatrixXd lower;
    double log_norm = 0.0;  // -0.5 (d log 2pi + log det)
};

Factor factorize(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("mixture covariance is not positive definite");
    }
    Factor f;
    f.lower = llt.matrixL();
    const auto d = static_cast<double>(cov.rows());
    f.log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi) - f.lower.diagonal().array().log().sum();
    return f;
}

double log_normal_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const Factor& f) {
    const Eigen::VectorXd z = f.lower.triangularView<Eigen::Lower>().solve(x - mean);
    return f.log_norm - 0.5 * z.squaredNorm();
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

void regularize(Eigen::MatrixXd& cov, double relative) {
    const double jitter = relative * cov.trace() + absolute_floor;
    cov.diagonal().array() += jitter;
}

}  // namespace

std::vector<GaussianComponent> GaussianMixture::original_components() const {
    std::vector<GaussianComponent> out;
    const int d = dim();
    for (const auto& c : components_) {
        GaussianComponent g;
        g.weight = c.weight;
        g.mean = center_;
        g.covariance = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t i = 0; i < free_.size(); ++i) {
            g.mean(free_[i]) = center_(free_[i]) + scale_(free_[i]) * c.mean(static_cast<Eigen::Index>(i));
            for (std::size_t j = 0; j < free_.size(); ++j) {
                g.covariance(free_[i], free_[j]) = scale_(free_[i]) * scale_(free_[j]) *
                                                   c.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        out.push_back(std::move(g));
    }
    return out;
}

Eigen::VectorXd GaussianMixture::sample(Rng& rng) const {
    Eigen::VectorXd x = center_;
    if (free_.empty()) return x;
    double u = uniform01(rng);
    std::size_t k = 0;
    while (k + 1 < components_.size() && u >= components_[k].weight) {
        u -= components_[k].weight;
        ++k;
    }
    const auto d = static_cast<Eigen::Index>(free_.size());
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = standard_normal(rng);
    const Eigen::VectorXd s = components_[k].mean + chol_[k] * z;
    for (std::size_t i = 0; i < free_.size(); ++i) {
        x(free_[i]) = center_(free_[i]) + scale_(free_[i]) * s(static_cast<Eigen::Index>(i));
    }
    return x;
}

GaussianMixture fit_weighted_gmm(const Eigen::MatrixXd& data, std::span<const double> weights, int k,
                                 const EmSettings& settings, Rng& rng) {
    const Eigen::Index n = data.rows();
    const Eigen::Index dim = data.cols();
    if (n == 0 || static_cast<std::size_t>(n) != weights.size()) {
        throw DomainError("data and weights must be nonempty and of equal length");
    }
    if (k < 1) throw DomainError("at least one mixture component is required");

    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), n);
    if ((w.array() < 0.0).any() || !(w.sum() > 0.0)) throw DomainError("weights must be non-negative with positive sum");
    w /= w.sum();

    GaussianMixture gm;
    gm.center_ = data.transpose() * w;
    gm.scale_ = Eigen::VectorXd::Ones(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        const double var = (w.array() * (data.col(j).array() - gm.center_(j)).square()).sum();
        const double sd = std::sqrt(std::max(var, 0.0));
        if (sd > 1e-12 * std::abs(gm.center_(j)) && sd > std::numeric_limits<double>::min()) {
            gm.scale_(j) = sd;
            gm.free_.push_back(static_cast<int>(j));
        }
    }
    const auto d = static_cast<Eigen::Index>(gm.free_.size());
    if (d == 0) {
        gm.components_.push_back({1.0, Eigen::VectorXd(), Eigen::MatrixXd()});
        gm.converged = true;
        return gm;
    }

    // Standardized free coordinates of the points that carry weight.
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > 0.0) active.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd z(m, d);
    Eigen::VectorXd wa(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        wa(r) = w(active[static_cast<std::size_t>(r)]);
        for (Eigen::Index c = 0; c < d; ++c) {
            const int j = gm.free_[static_cast<std::size_t>(c)];
            z(r, c) = (data(active[static_cast<std::size_t>(r)], j) - gm.center_(j)) / gm.scale_(j);
        }
    }
    if (k > m) throw NumericalError("more components than weighted samples");

    // Weighted k-means++ seeding.
    std::vector<Eigen::VectorXd> means;
    std::vector<double> dist2(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    auto pick = [&](const Eigen::VectorXd& p) {
        double total = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) total += p(r);
        double u = uniform01(rng) * total;
        for (Eigen::Index r = 0; r < m; ++r) {
            u -= p(r);
            if (u <= 0.0) return r;
        }
        return m - 1;
    };
    means.push_back(z.row(pick(wa)).transpose());
    while (static_cast<int>(means.size()) < k) {
        Eigen::VectorXd p(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            auto& dr = dist2[static_cast<std::size_t>(r)];
            dr = std::min(dr, (z.row(r).transpose() - means.back()).squaredNorm());
            p(r) = wa(r) * dr;
        }
        if (!(p.sum() > 0.0)) throw NumericalError("fewer distinct samples than components");
        means.push_back(z.row(pick(p)).transpose());
    }

    std::vector<GaussianComponent> comps(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        comps[static_cast<std::size_t>(c)] = {1.0 / k, means[static_cast<std::size_t>(c)], Eigen::MatrixXd::Identity(d, d)};
    }

    Eigen::MatrixXd resp(m, k);
    double previous = -std::numeric_limits<double>::infinity();
    for (int it = 1; it <= settings.max_iterations; ++it) {
        std::vector<Factor> factors;
        for (const auto& c : comps) factors.push_back(factorize(c.covariance));
        double ll = 0.0;
        for (Eigen::Index r = 0; r < m; ++r) {
            Eigen::VectorXd lp(k);
            for (int c = 0; c < k; ++c) {
                const auto& comp = comps[static_cast<std::size_t>(c)];
                lp(c) = std::log(comp.weight) + log_normal_density(z.row(r).transpose(), comp.mean, factors[static_cast<std::size_t>(c)]);
            }
            const double lse = log_sum_exp(lp);
            resp.row(r) = (lp.array() - lse).exp().transpose();
            ll += wa(r) * lse;
        }
        if (!std::isfinite(ll)) throw NumericalError("mixture log-likelihood is not finite");
        gm.log_likelihood = ll;
        gm.iterations = it;
        if (std::abs(ll - previous) <= settings.tolerance * std::max(1.0, std::abs(ll))) {
            gm.converged = true;
            break;
        }
        previous = ll;

        for (int c = 0; c < k; ++c) {
            const Eigen::VectorXd rw = resp.col(c).cwiseProduct(wa);
            const double nk = rw.sum();
            if (!(nk > 1e-12)) throw NumericalError(fmt::format("mixture component {} lost all weight", c + 1));
            auto& comp = comps[static_cast<std::size_t>(c)];
            comp.weight = nk;
            comp.mean = z.transpose() * rw / nk;
            const Eigen::MatrixXd centered = z.rowwise() - comp.mean.transpose();
            comp.covariance = centered.transpose() * rw.asDiagonal() * centered / nk;
            regularize(comp.covariance, settings.regularization);
        }
    }

    for (auto& c : comps) {
        regularize(c.covariance, 0.0);
        gm.chol_.push_back(factorize(c.covariance).lower);
    }
    gm.components_ = std::move(comps);

    const double n_eff = 1.0 / wa.squaredNorm();
    const double params = (k - 1) + k * d + k * d * (d + 1) / 2.0;
    gm.bic = -2.0 * n_eff * gm.log_likelihood + params * std::log(n_eff);
    return gm;
}

GaussianMixture select_weighted_gmm(const Eigen::MatrixXd& data, std::span<const double> weights,
                                    int max_components, const EmSettings& settings, Rng& rng) {
    std::optional<GaussianMixture> best;
    std::string last_error;
    for (int k = 1; k <= max_components; ++k) {
        try {
            GaussianMixture gm = fit_weighted_gmm(data, weights, k, settings, rng);
            if (!best || gm.bic < best->bic) best = std::move(gm);
            if (best->modeled_dims() == 0) break;
        } catch (const NumericalError& ex) {
            last_error = ex.what();
        }
    }
    if (!best) throw NumericalError(fmt::format("no mixture could be fitted: {}", last_error));
    return *best;
}

}  // namespace voshm
