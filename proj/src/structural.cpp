#include "voshm/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

std::vector<int> BridgeConfig::resolved_sensor_nodes() const {
    if (!sensor_nodes.empty()) {
        return sensor_nodes;
    }
    constexpr int n_sensors = 12;
    const int last = node_count() - 1;
    std::vector<int> nodes;
    nodes.reserve(n_sensors);
    for (int k = 1; k <= n_sensors; ++k) {
        int node = static_cast<int>(std::lround(static_cast<double>(k) * last / (n_sensors + 1)));
        if (node == middle_node()) {
            ++node;
        }
        nodes.push_back(node);
    }
    return nodes;
}

void BridgeConfig::validate() const {
    for (std::size_t i = 0; i < span_lengths.size(); ++i) {
        if (!(span_lengths[i] > 0.0)) {
            throw ConfigError("span length must be positive", fmt::format("model.spans_m[{}]", i));
        }
    }
    if (!(section_area > 0.0)) throw ConfigError("must be positive", "model.section_area_m2");
    if (!(section_inertia > 0.0)) throw ConfigError("must be positive", "model.section_inertia_m4");
    if (!(density > 0.0)) throw ConfigError("must be positive", "model.density_kgm3");
    if (elements_per_span < 4) throw ConfigError("must be at least 4", "model.elements_per_span");
    for (std::size_t i = 0; i < support_stiffness_vertical.size(); ++i) {
        if (!(support_stiffness_vertical[i] > 0.0)) {
            throw ConfigError("support stiffness must be positive", fmt::format("model.Ky_Nm[{}]", i));
        }
    }
    if (!(support_stiffness_horizontal > 0.0)) throw ConfigError("must be positive", "model.Kx_Nm");
    if (!(nominal_youngs_modulus > 0.0)) throw ConfigError("must be positive", "model.E0_Pa");
    if (n_modes < 3 || n_modes > 5) throw ConfigError("must be in [3, 5]", "model.n_modes");
    std::set<int> seen;
    for (int node : resolved_sensor_nodes()) {
        if (node <= 0 || node >= node_count() - 1 || node == middle_node()) {
            throw ConfigError(fmt::format("sensor node {} is not an interior mesh node", node),
                              "model.sensor_nodes");
        }
        if (!seen.insert(node).second) {
            throw ConfigError(fmt::format("duplicate sensor node {}", node), "model.sensor_nodes");
        }
    }
}

std::vector<double> ModalResult::frequencies() const {
    std::vector<double> f(eigenvalues.size());
    std::transform(eigenvalues.begin(), eigenvalues.end(), f.begin(), frequency_of);
    return f;
}

double ModalResult::frequency_of(double eigenvalue) {
    return std::sqrt(eigenvalue) / (2.0 * std::numbers::pi);
}

double ModalResult::eigenvalue_of(double frequency_hz) {
    const double omega = 2.0 * std::numbers::pi * frequency_hz;
    return omega * omega;
}

double damaged_support_stiffness(double k_y0, double x) {
    if (!(x >= 0.0)) {
        throw DomainError(fmt::format("deterioration must be non-negative, got {}", x));
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return k_y0 / (1.0 + x);
}

BridgeModel::BridgeModel(BridgeConfig config) : config_(std::move(config)) {
    config_.validate();

    const int n_dof = 2 * config_.node_count();
    beam_stiffness_unit_ = Eigen::MatrixXd::Zero(n_dof, n_dof);
    mass_ = Eigen::MatrixXd::Zero(n_dof, n_dof);
    unit_load_ = Eigen::VectorXd::Zero(n_dof);

    const int n_elements = 2 * config_.elements_per_span;
    for (int e = 0; e < n_elements; ++e) {
        const double h = element_length(e);
        const Eigen::Matrix4d ke = element_stiffness_unit(h);
        const Eigen::Matrix4d me = element_mass(h);
        const Eigen::Vector4d fe = element_load(h);
        const int first = 2 * e;
        beam_stiffness_unit_.block<4, 4>(first, first) += ke;
        mass_.block<4, 4>(first, first) += me;
        unit_load_.segment<4>(first) += fe;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(mass_);
    if (llt.info() != Eigen::Success) {
        throw ConfigError("mass matrix is not positive definite (check section and density)", "model");
    }
}

double BridgeModel::element_length(int element) const {
    const int span = element < config_.elements_per_span ? 0 : 1;
    return config_.span_lengths[span] / config_.elements_per_span;
}

Eigen::Matrix4d BridgeModel::element_stiffness_unit(double h) const {
    const double c = config_.section_inertia / (h * h * h);
    Eigen::Matrix4d k;
    k << 12.0, 6.0 * h, -12.0, 6.0 * h,
         6.0 * h, 4.0 * h * h, -6.0 * h, 2.0 * h * h,
         -12.0, -6.0 * h, 12.0, -6.0 * h,
         6.0 * h, 2.0 * h * h, -6.0 * h, 4.0 * h * h;
    return c * k;
}

// Consistent mass of the cubic Hermite element.
Eigen::Matrix4d BridgeModel::element_mass(double h) const {
    const double c = config_.density * config_.section_area * h / 420.0;
    Eigen::Matrix4d m;
    m << 156.0, 22.0 * h, 54.0, -13.0 * h,
         22.0 * h, 4.0 * h * h, 13.0 * h, -3.0 * h * h,
         54.0, 13.0 * h, 156.0, -22.0 * h,
         -13.0 * h, -3.0 * h * h, -22.0 * h, 4.0 * h * h;
    return c * m;
}

Eigen::Vector4d BridgeModel::element_load(double h) const {
    return Eigen::Vector4d(h / 2.0, h * h / 12.0, h / 2.0, -h * h / 12.0);
}

std::array<int, 3> BridgeModel::support_nodes() const {
    return {0, config_.middle_node(), config_.node_count() - 1};
}

Eigen::MatrixXd BridgeModel::stiffness_with_middle_support(double e, double k_middle) const {
    Eigen::MatrixXd k = e * beam_stiffness_unit_;
    const auto nodes = support_nodes();
    k(vertical_dof(nodes[0]), vertical_dof(nodes[0])) += config_.support_stiffness_vertical[0];
    k(vertical_dof(nodes[1]), vertical_dof(nodes[1])) += k_middle;
    k(vertical_dof(nodes[2]), vertical_dof(nodes[2])) += config_.support_stiffness_vertical[2];
    return k;
}

Eigen::MatrixXd BridgeModel::stiffness(double e, double x) const {
    return stiffness_with_middle_support(
        e, damaged_support_stiffness(config_.support_stiffness_vertical[1], x));
}

ModalShapes BridgeModel::eigenpairs(double e, double k_middle, int n) const {
    if (!(e > 0.0)) {
        throw DomainError(fmt::format("effective Young's modulus must be positive, got {}", e));
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        stiffness_with_middle_support(e, k_middle), mass_, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw NumericalError(fmt::format(
            "generalized eigensolver failed (info={}, E={:.6g} Pa, k_middle={:.6g} N/m)",
            static_cast<int>(solver.info()), e, k_middle));
    }
    const Eigen::VectorXd& values = solver.eigenvalues();
    const double scale = values.cwiseAbs().maxCoeff();
    if (values(0) <= 1e-12 * scale) {
        throw NumericalError(fmt::format(
            "rigid-body mode detected: lowest eigenvalue {:.3e} (largest {:.3e})", values(0), scale));
    }
    n = std::min<int>(n, static_cast<int>(values.size()));
    return ModalShapes{values.head(n), solver.eigenvectors().leftCols(n)};
}

ModalResult BridgeModel::modal_analysis(double x, double e_eff, int n_modes) const {
    if (n_modes < 1 || n_modes > dof_count()) {
        throw DomainError(fmt::format("invalid number of modes {}", n_modes));
    }
    const double k_middle = damaged_support_stiffness(config_.support_stiffness_vertical[1], x);
    const ModalShapes pairs = eigenpairs(e_eff, k_middle, n_modes);
    ModalResult result;
    result.eigenvalues.assign(pairs.eigenvalues.data(), pairs.eigenvalues.data() + pairs.eigenvalues.size());
    return result;
}

Eigen::VectorXd BridgeModel::static_response(double x, double e) const {
    Eigen::LLT<Eigen::MatrixXd> llt(stiffness(e, x));
    if (llt.info() != Eigen::Success) {
        throw NumericalError(fmt::format("singular static system at x={:.6g}", x));
    }
    return llt.solve(unit_load_);
}

double BridgeModel::right_midspan_moment(double x, double e) const {
    const Eigen::VectorXd u = static_response(x, e);
    // The element starting at the midspan node carries the node moment as its first-end moment.
    const int element = config_.right_midspan_node();
    const double h = element_length(element);
    const Eigen::Vector4d ue = u.segment<4>(2 * element);
    const Eigen::Vector4d end_forces = e * element_stiffness_unit(h) * ue - element_load(h);
    return std::abs(end_forces(1));
}

double CapacityCurve::evaluate(double x) const {
    if (!(x >= 0.0)) {
        throw DomainError(fmt::format("deterioration must be non-negative, got {}", x));
    }
    const std::size_t n = x_grid.size();
    if (x >= x_grid.back()) {
        if (n < 2 || std::isinf(x)) {
            return std::isinf(x) ? r_min : std::max(r_values.back(), r_min);
        }
        const double slope = (r_values[n - 1] - r_values[n - 2]) / (x_grid[n - 1] - x_grid[n - 2]);
        return std::max(r_values[n - 1] + slope * (x - x_grid[n - 1]), r_min);
    }
    const auto upper = std::upper_bound(x_grid.begin(), x_grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(upper - x_grid.begin());
    const double x0 = x_grid[i - 1];
    const double x1 = x_grid[i];
    const double w = (x - x0) / (x1 - x0);
    return std::max((1.0 - w) * r_values[i - 1] + w * r_values[i], r_min);
}

double evaluate_capacity(const CapacityCurve& curve, double x) { return curve.evaluate(x); }

std::vector<double> default_capacity_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(0.1 * i);        // 0 .. 10
    for (int i = 11; i <= 50; ++i) grid.push_back(static_cast<double>(i));
    for (int i = 60; i <= 200; i += 10) grid.push_back(static_cast<double>(i));
    return grid;
}

CapacityCurve capacity_curve(const BridgeModel& model, std::span<const double> x_grid) {
    if (x_grid.empty() || x_grid.front() != 0.0) {
        throw DomainError("capacity grid must start at 0");
    }
    if (!std::is_sorted(x_grid.begin(), x_grid.end()) ||
        std::adjacent_find(x_grid.begin(), x_grid.end()) != x_grid.end()) {
        throw DomainError("capacity grid must be strictly ascending");
    }
    const double e0 = model.config().nominal_youngs_modulus;
    const double reference = model.right_midspan_moment(0.0, e0);
    CapacityCurve curve;
    curve.x_grid.assign(x_grid.begin(), x_grid.end());
    curve.r_values.reserve(x_grid.size());
    for (double x : x_grid) {
        curve.r_values.push_back(reference / model.right_midspan_moment(x, e0));
    }
    curve.r_values.front() = 1.0;
    return curve;
}

}  // namespace voshm
