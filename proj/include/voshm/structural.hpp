#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace voshm {

/**
 * Geometry and material of the two-span beam on three elastic supports.
 *
 * Only vertical bending is modeled. The horizontal support stiffness is kept
 * for configuration fidelity and does not enter the vertical eigenproblem.
 */
struct BridgeConfig {
    std::array<double, 2> span_lengths{25.0, 25.0};            // m
    double section_area = 0.4;                                 // m^2
    double section_inertia = 0.02133;                          // m^4
    double density = 2500.0;                                   // kg/m^3
    int elements_per_span = 20;
    std::array<double, 3> support_stiffness_vertical{1e7, 1e7, 1e7};  // N/m
    double support_stiffness_horizontal = 1e8;                 // N/m
    double nominal_youngs_modulus = 29.11e9;                   // Pa, E_0 at 20 C
    int n_modes = 5;
    std::vector<int> sensor_nodes;  // empty: 12 nodes spread evenly

    int node_count() const { return 2 * elements_per_span + 1; }
    int middle_node() const { return elements_per_span; }
    /// Node at the center of the right span.
    int right_midspan_node() const { return elements_per_span + elements_per_span / 2; }
    std::vector<int> resolved_sensor_nodes() const;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Lowest eigenvalues (rad/s)^2 in ascending order.
struct ModalResult {
    std::vector<double> eigenvalues;

    std::vector<double> frequencies() const;  // Hz, lambda = (2 pi f)^2
    static double frequency_of(double eigenvalue);
    static double eigenvalue_of(double frequency_hz);
};

/// Eigenpairs with mass-normalized shapes, used for mode tracking.
struct ModalShapes {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd shapes;  // columns
};

/// K_y^(2)(x) = K_y0 / (1 + x). x may be +inf (support fully lost).
double damaged_support_stiffness(double k_y0, double x);

/**
 * Assembled Euler-Bernoulli finite-element model.
 *
 * Two degrees of freedom per node (deflection, rotation). The beam stiffness is
 * stored per unit Young's modulus so that any effective modulus and any middle
 * support stiffness can be applied without reassembly. Immutable after
 * construction and safe to share between threads.
 */
class BridgeModel {
public:
    explicit BridgeModel(BridgeConfig config);

    const BridgeConfig& config() const noexcept { return config_; }
    int dof_count() const noexcept { return static_cast<int>(mass_.rows()); }
    const Eigen::MatrixXd& mass() const noexcept { return mass_; }

    /// Full stiffness for effective modulus `e` and deterioration `x`.
    Eigen::MatrixXd stiffness(double e, double x) const;
    /// Full stiffness with an explicit middle support stiffness (N/m).
    Eigen::MatrixXd stiffness_with_middle_support(double e, double k_middle) const;

    /// n lowest eigenpairs of K(e, k_middle) phi = lambda M phi.
    ModalShapes eigenpairs(double e, double k_middle, int n) const;

    /// Lowest n_modes eigenvalues at deterioration x and effective modulus e_eff.
    ModalResult modal_analysis(double x, double e_eff, int n_modes) const;
    ModalResult modal_analysis(double x, double e_eff) const {
        return modal_analysis(x, e_eff, config_.n_modes);
    }

    /// Static deflections under a uniform unit line load (N/m).
    Eigen::VectorXd static_response(double x, double e) const;

    /// Bending moment (N m) at the center of the right span under the unit load.
    double right_midspan_moment(double x, double e) const;

private:
    Eigen::Matrix4d element_stiffness_unit(double h) const;
    Eigen::Matrix4d element_mass(double h) const;
    Eigen::Vector4d element_load(double h) const;
    double element_length(int element) const;
    int vertical_dof(int node) const { return 2 * node; }
    std::array<int, 3> support_nodes() const;

    BridgeConfig config_;
    Eigen::MatrixXd beam_stiffness_unit_;  // E = 1
    Eigen::MatrixXd mass_;
    Eigen::VectorXd unit_load_;
};

/// Normalized capacity R(x) = sigma_max(0) / sigma_max(x).
struct CapacityCurve {
    static constexpr double r_min = 1e-3;

    std::vector<double> x_grid;
    std::vector<double> r_values;

    /// Piecewise-linear interpolation; beyond the grid the last segment is
    /// extended and floored at r_min.
    double evaluate(double x) const;
};

/// Default deterioration grid: fine near zero, coarser for large damage.
std::vector<double> default_capacity_grid();

/// Static analyses along an ascending grid starting at 0, at the nominal modulus.
CapacityCurve capacity_curve(const BridgeModel& model, std::span<const double> x_grid);

double evaluate_capacity(const CapacityCurve& curve, double x);

}  // namespace voshm
