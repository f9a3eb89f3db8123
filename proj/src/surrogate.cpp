#include "voshm/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

namespace {

constexpr int max_degree = 12;
constexpr int max_monomials = (max_degree + 1) * (max_degree + 2) / 2;
constexpr int max_branches = 32;

double to_u(double x) { return std::isinf(x) ? 0.0 : 1.0 / (1.0 + x); }

// Greedy global assignment of previous shapes to new shapes by descending MAC.
std::vector<int> match_shapes(const Eigen::MatrixXd& previous, const Eigen::MatrixXd& current,
                              const Eigen::MatrixXd& mass) {
    const Eigen::MatrixXd cross = previous.transpose() * mass * current;
    const Eigen::MatrixXd mac = cross.cwiseProduct(cross);
    std::vector<std::tuple<double, int, int>> pairs;
    for (int i = 0; i < mac.rows(); ++i) {
        for (int j = 0; j < mac.cols(); ++j) {
            pairs.emplace_back(mac(i, j), i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
    std::vector<int> order(previous.cols(), -1);
    std::vector<bool> used(current.cols(), false);
    int assigned = 0;
    for (const auto& [value, i, j] : pairs) {
        if (order[i] >= 0 || used[j]) continue;
        order[i] = j;
        used[j] = true;
        if (++assigned == static_cast<int>(order.size())) break;
    }
    return order;
}

Eigen::MatrixXd reorder_columns(const Eigen::MatrixXd& m, const std::vector<int>& order) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t k = 0; k < order.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(order[k]);
    return out;
}

}  // namespace

ModalResult ModalPredictor::predict(double x, double e) const {
    ModalResult result;
    result.eigenvalues.resize(static_cast<std::size_t>(n_modes()));
    eigenvalues(x, e, result.eigenvalues);
    return result;
}

FeModalPredictor::FeModalPredictor(std::shared_ptr<const BridgeModel> model, int n_modes)
    : model_(std::move(model)), n_modes_(n_modes) {}

void FeModalPredictor::eigenvalues(double x, double e, std::span<double> out) const {
    const ModalResult r = model_->modal_analysis(x, e, n_modes_);
    std::copy(r.eigenvalues.begin(), r.eigenvalues.end(), out.begin());
}

int monomial_count(int degree) { return (degree + 1) * (degree + 2) / 2; }

SurrogateGrid default_surrogate_grid(const BridgeConfig& config, int n_u, int n_e,
                                     double e_lo_factor, double e_hi_factor) {
    SurrogateGrid grid;
    for (int i = 0; i < n_u; ++i) {
        const double u = 1.0 - static_cast<double>(i) / (n_u - 1);
        grid.x.push_back(u > 0.0 ? 1.0 / u - 1.0 : std::numeric_limits<double>::infinity());
    }
    const double e0 = config.nominal_youngs_modulus;
    for (int j = 0; j < n_e; ++j) {
        const double t = n_e == 1 ? 0.0 : static_cast<double>(j) / (n_e - 1);
        grid.e.push_back(e0 * e_lo_factor * std::pow(e_hi_factor / e_lo_factor, t));
    }
    return grid;
}

ModalSurrogate::ModalSurrogate(int n_modes, int degree, double ridge, SurrogateDomain domain,
                               std::vector<Branch> branches)
    : n_modes_(n_modes), degree_(degree), ridge_(ridge), domain_(domain), branches_(std::move(branches)) {
    if (degree_ < 1 || degree_ > max_degree) {
        throw FitError(fmt::format("surrogate degree must be in [1, {}]", max_degree));
    }
    if (static_cast<int>(branches_.size()) < n_modes_ || branches_.size() > max_branches) {
        throw FitError("surrogate needs at least n_modes branches");
    }
    for (const auto& b : branches_) {
        if (static_cast<int>(b.coefficients.size()) != monomial_count(degree_)) {
            throw FitError("surrogate coefficient count does not match its degree");
        }
    }
    if (!(domain_.e_max > domain_.e_min && domain_.e_min > 0.0 && domain_.u_max > domain_.u_min)) {
        throw FitError("invalid surrogate domain");
    }
}

bool ModalSurrogate::in_domain(double x, double e) const {
    const double u = to_u(x);
    return u >= domain_.u_min && u <= domain_.u_max && e >= domain_.e_min && e <= domain_.e_max;
}

void ModalSurrogate::monomials(double x, double e, std::span<double> out) const {
    const double u = std::clamp(to_u(x), domain_.u_min, domain_.u_max);
    const double ec = std::clamp(e, domain_.e_min, domain_.e_max);
    const double s = 2.0 * (u - domain_.u_min) / (domain_.u_max - domain_.u_min) - 1.0;
    const double v = 2.0 * std::log(ec / domain_.e_min) / std::log(domain_.e_max / domain_.e_min) - 1.0;
    std::array<double, max_degree + 1> sp{};
    std::array<double, max_degree + 1> vp{};
    sp[0] = vp[0] = 1.0;
    for (int k = 1; k <= degree_; ++k) {
        sp[k] = sp[k - 1] * s;
        vp[k] = vp[k - 1] * v;
    }
    int idx = 0;
    for (int i = 0; i <= degree_; ++i) {
        for (int j = 0; j <= degree_ - i; ++j) {
            out[idx++] = sp[i] * vp[j];
        }
    }
}

double ModalSurrogate::branch_value(const Branch& branch, std::span<const double> mono) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < branch.coefficients.size(); ++k) acc += branch.coefficients[k] * mono[k];
    return acc * branch.scale;
}

void ModalSurrogate::eigenvalues(double x, double e, std::span<double> out) const {
    std::array<double, max_monomials> mono{};
    monomials(x, e, std::span<double>(mono.data(), static_cast<std::size_t>(monomial_count(degree_))));
    std::array<double, max_branches> values{};
    const std::size_t nb = branches_.size();
    for (std::size_t b = 0; b < nb; ++b) {
        values[b] = branch_value(branches_[b], mono);
    }
    std::partial_sort(values.begin(), values.begin() + n_modes_, values.begin() + static_cast<std::ptrdiff_t>(nb));
    for (int m = 0; m < n_modes_; ++m) {
        out[static_cast<std::size_t>(m)] = std::max(values[static_cast<std::size_t>(m)], std::numeric_limits<double>::min());
    }
}

ModalSurrogate::Prediction ModalSurrogate::predict_checked(double x, double e) const {
    if (!(x >= 0.0)) {
        throw DomainError(fmt::format("deterioration must be non-negative, got {}", x));
    }
    return Prediction{predict(x, e), !in_domain(x, e)};
}

nlohmann::json ModalSurrogate::to_json() const {
    nlohmann::json doc;
    doc["format"] = "voshm-modal-surrogate";
    doc["version"] = 1;
    doc["n_modes"] = n_modes_;
    doc["degree"] = degree_;
    doc["regularization"] = ridge_;
    doc["domain"] = {{"u_min", domain_.u_min},
                     {"u_max", domain_.u_max},
                     {"e_min_Pa", domain_.e_min},
                     {"e_max_Pa", domain_.e_max}};
    doc["branches"] = nlohmann::json::array();
    for (const auto& b : branches_) {
        doc["branches"].push_back({{"scale", b.scale}, {"coefficients", b.coefficients}});
    }
    return doc;
}

ModalSurrogate ModalSurrogate::from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "voshm-modal-surrogate") {
            throw FitError("not a modal surrogate document");
        }
        SurrogateDomain domain;
        const auto& d = doc.at("domain");
        domain.u_min = d.at("u_min").get<double>();
        domain.u_max = d.at("u_max").get<double>();
        domain.e_min = d.at("e_min_Pa").get<double>();
        domain.e_max = d.at("e_max_Pa").get<double>();
        std::vector<Branch> branches;
        for (const auto& b : doc.at("branches")) {
            branches.push_back(Branch{b.at("scale").get<double>(), b.at("coefficients").get<std::vector<double>>()});
        }
        return ModalSurrogate(doc.at("n_modes").get<int>(), doc.at("degree").get<int>(),
                              doc.at("regularization").get<double>(), domain, std::move(branches));
    } catch (const nlohmann::json::exception& ex) {
        throw FitError(fmt::format("malformed surrogate document: {}", ex.what()));
    }
}

std::vector<std::vector<std::vector<double>>> tracked_branch_eigenvalues(
    const BridgeModel& model, std::span<const double> x_grid, std::span<const double> e_grid,
    int n_branches) {
    const int n_computed = std::min(n_branches + 4, model.dof_count());
    const double k0 = model.config().support_stiffness_vertical[1];
    const Eigen::MatrixXd& mass = model.mass();

    std::vector<std::vector<std::vector<double>>> values(
        x_grid.size(), std::vector<std::vector<double>>(e_grid.size(), std::vector<double>(n_branches)));

    Eigen::MatrixXd anchor;  // tracked shapes at the first x of the previous e column
    for (std::size_t ie = 0; ie < e_grid.size(); ++ie) {
        Eigen::MatrixXd previous;
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            const ModalShapes pairs = model.eigenpairs(e_grid[ie], damaged_support_stiffness(k0, x_grid[ix]), n_computed);
            std::vector<int> order;
            if (ix == 0 && anchor.size() == 0) {
                order.resize(static_cast<std::size_t>(n_branches));
                std::iota(order.begin(), order.end(), 0);
            } else {
                order = match_shapes(ix == 0 ? anchor : previous, pairs.shapes, mass);
            }
            previous = reorder_columns(pairs.shapes, order);
            if (ix == 0) anchor = previous;
            for (int b = 0; b < n_branches; ++b) {
                values[ix][ie][static_cast<std::size_t>(b)] = pairs.eigenvalues(order[static_cast<std::size_t>(b)]);
            }
        }
    }
    return values;
}

ModalSurrogate fit_surrogate(const BridgeModel& model, std::span<const double> x_grid,
                             std::span<const double> e_grid, int n_modes, const SurrogateSettings& settings) {
    if (settings.degree < 1 || settings.degree > max_degree) {
        throw FitError(fmt::format("surrogate degree must be in [1, {}]", max_degree));
    }
    if (!(settings.ridge >= 0.0)) {
        throw FitError("regularization strength must be non-negative");
    }
    if (x_grid.empty() || e_grid.empty() || !std::is_sorted(x_grid.begin(), x_grid.end()) ||
        !std::is_sorted(e_grid.begin(), e_grid.end())) {
        throw FitError("surrogate grids must be non-empty and ascending");
    }
    const std::set<double> unique_x(x_grid.begin(), x_grid.end());
    const std::set<double> unique_e(e_grid.begin(), e_grid.end());
    const auto needed = static_cast<std::size_t>(settings.degree + 1);
    if (unique_x.size() < needed || unique_e.size() < needed) {
        throw FitError(fmt::format(
            "degenerate design: {} distinct x and {} distinct e values for degree {} (need {} each)",
            unique_x.size(), unique_e.size(), settings.degree, needed));
    }
    if (!(e_grid.front() > 0.0) || !(x_grid.front() >= 0.0)) {
        throw FitError("surrogate grid outside the physical domain");
    }

    const int n_branches = n_modes + settings.extra_branches;
    const auto values = tracked_branch_eigenvalues(model, x_grid, e_grid, n_branches);

    SurrogateDomain domain{to_u(x_grid.back()), to_u(x_grid.front()), e_grid.front(), e_grid.back()};
    const int n_terms = monomial_count(settings.degree);
    const auto n_points = static_cast<Eigen::Index>(x_grid.size() * e_grid.size());

    // Build the design through a provisional surrogate to share the feature map.
    std::vector<ModalSurrogate::Branch> placeholder(
        static_cast<std::size_t>(n_branches), ModalSurrogate::Branch{1.0, std::vector<double>(static_cast<std::size_t>(n_terms), 0.0)});
    const ModalSurrogate feature_map(n_modes, settings.degree, settings.ridge, domain, placeholder);

    Eigen::MatrixXd design(n_points, n_terms);
    std::array<double, max_monomials> mono{};
    Eigen::Index row = 0;
    for (double x : x_grid) {
        for (double e : e_grid) {
            feature_map.monomials(x, e, std::span<double>(mono.data(), static_cast<std::size_t>(n_terms)));
            for (int k = 0; k < n_terms; ++k) design(row, k) = mono[static_cast<std::size_t>(k)];
            ++row;
        }
    }
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += settings.ridge;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15) {
        throw FitError(fmt::format("ill-conditioned surrogate design (rcond={:.3e})", ldlt.rcond()));
    }

    std::vector<ModalSurrogate::Branch> branches;
    for (int b = 0; b < n_branches; ++b) {
        Eigen::VectorXd target(n_points);
        row = 0;
        for (std::size_t ix = 0; ix < x_grid.size(); ++ix) {
            for (std::size_t ie = 0; ie < e_grid.size(); ++ie) {
                target(row++) = values[ix][ie][static_cast<std::size_t>(b)];
            }
        }
        const double scale = target.mean();
        const Eigen::VectorXd coeffs = ldlt.solve(design.transpose() * (target / scale));
        branches.push_back(ModalSurrogate::Branch{scale, std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size())});
    }
    return ModalSurrogate(n_modes, settings.degree, settings.ridge, domain, std::move(branches));
}

ModalResult predict_modal(const ModalSurrogate& surrogate, double x, double e_eff) {
    return surrogate.predict_checked(x, e_eff).modal;
}

}  // namespace voshm
