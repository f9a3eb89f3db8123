#pragma once

#include <memory>
#include <span>
#include <vector>

#include "json.hpp"

#include "voshm/structural.hpp"

namespace voshm {

/// Maps (deterioration x, effective modulus e) to the lowest eigenvalues.
class ModalPredictor {
public:
    virtual ~ModalPredictor() = default;

    virtual int n_modes() const = 0;

    /// Writes the n_modes() lowest eigenvalues, ascending, into `out`.
    virtual void eigenvalues(double x, double e, std::span<double> out) const = 0;

    /// False where the predictor extrapolates (clamps).
    virtual bool in_domain(double /*x*/, double /*e*/) const { return true; }

    ModalResult predict(double x, double e) const;
};

/// Direct finite-element evaluation.
class FeModalPredictor final : public ModalPredictor {
public:
    FeModalPredictor(std::shared_ptr<const BridgeModel> model, int n_modes);

    int n_modes() const override { return n_modes_; }
    void eigenvalues(double x, double e, std::span<double> out) const override;

private:
    std::shared_ptr<const BridgeModel> model_;
    int n_modes_;
};

struct SurrogateSettings {
    int degree = 6;
    double ridge = 1e-6;
    /// Branches tracked beyond n_modes, so that modes descending from higher
    /// up the spectrum are still represented after crossings.
    int extra_branches = 3;
};

/// Fit domain. The deterioration axis is u = 1/(1+x), so u_min = 0 covers x -> inf.
struct SurrogateDomain {
    double u_min = 0.0;
    double u_max = 1.0;
    double e_min = 0.0;
    double e_max = 0.0;
};

struct SurrogateGrid {
    std::vector<double> x;  // ascending, may end with +inf
    std::vector<double> e;  // ascending, Pa
};

/// Grid uniform in u = 1/(1+x) over [0, 1] and geometric in e over [lo, hi] * E_0.
SurrogateGrid default_surrogate_grid(const BridgeConfig& config, int n_u = 33, int n_e = 9,
                                     double e_lo_factor = 0.6, double e_hi_factor = 2.0);

/**
 * Polynomial ridge-regression response surface of the modal map.
 *
 * Each tracked mode branch (a mode followed by shape continuity across the
 * grid, not by rank) has its own polynomial in
 *   s = 2 (u - u_min)/(u_max - u_min) - 1,  v = 2 log(e/e_min)/log(e_max/e_min) - 1
 * fitted to the branch eigenvalues. A prediction evaluates all branches and
 * sorts them, which reproduces the kinks where modes cross.
 */
class ModalSurrogate final : public ModalPredictor {
public:
    struct Branch {
        double scale = 1.0;                // eigenvalue unit of the coefficients
        std::vector<double> coefficients;  // monomials s^i v^j, i + j <= degree
    };

    struct Prediction {
        ModalResult modal;
        bool out_of_domain = false;
    };

    ModalSurrogate(int n_modes, int degree, double ridge, SurrogateDomain domain,
                   std::vector<Branch> branches);

    int n_modes() const override { return n_modes_; }
    int degree() const noexcept { return degree_; }
    double ridge() const noexcept { return ridge_; }
    const SurrogateDomain& domain() const noexcept { return domain_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }

    void eigenvalues(double x, double e, std::span<double> out) const override;

    /// Prediction clamped to the fit domain, with a flag when clamping happened.
    Prediction predict_checked(double x, double e) const;

    bool in_domain(double x, double e) const override;

    /// Feature vector (monomials of the scaled coordinates), clamped to the domain.
    void monomials(double x, double e, std::span<double> out) const;

    nlohmann::json to_json() const;
    static ModalSurrogate from_json(const nlohmann::json& doc);

private:
    double branch_value(const Branch& branch, std::span<const double> monomials) const;

    int n_modes_;
    int degree_;
    double ridge_;
    SurrogateDomain domain_;
    std::vector<Branch> branches_;
};

int monomial_count(int degree);

/// Tracked branch eigenvalues on a grid: values[ix][ie][branch].
std::vector<std::vector<std::vector<double>>> tracked_branch_eigenvalues(
    const BridgeModel& model, std::span<const double> x_grid, std::span<const double> e_grid,
    int n_branches);

ModalSurrogate fit_surrogate(const BridgeModel& model, std::span<const double> x_grid,
                             std::span<const double> e_grid, int n_modes,
                             const SurrogateSettings& settings = {});

ModalResult predict_modal(const ModalSurrogate& surrogate, double x, double e_eff);

}  // namespace voshm
