#include "voshm/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "voshm/errors.hpp"

namespace voshm {

std::array<double, EnvParams::dim> EnvParams::to_array() const {
    return {slope, intercept, step_size, transition_center, transition_width};
}

EnvParams EnvParams::from_array(const std::array<double, dim>& v) {
    return EnvParams{v[0], v[1], v[2], v[3], v[4]};
}

bool EnvParams::valid() const {
    if (!(transition_width > 0.0)) return false;
    for (double t : {-20.0, 40.0}) {
        if (!(theta_of_temperature(*this, t) > 0.0)) return false;
    }
    return true;
}

double theta_of_temperature(const EnvParams& p, double t) {
    return p.slope * t + p.intercept +
           p.step_size * (1.0 - std::erf((t - p.transition_center) / p.transition_width));
}

double theta_derivative(const EnvParams& p, double t) {
    const double z = (t - p.transition_center) / p.transition_width;
    return p.slope - 2.0 * p.step_size / (p.transition_width * std::sqrt(std::numbers::pi)) * std::exp(-z * z);
}

double effective_youngs_modulus(const EnvParams& params, double t_celsius, double e0) {
    if (!(e0 > 0.0)) {
        throw DomainError("nominal Young's modulus must be positive");
    }
    const double theta = theta_of_temperature(params, t_celsius);
    if (!(theta > 0.0)) {
        throw DomainError(fmt::format("modulus factor {:.4g} at {:.2f} C is not positive", theta, t_celsius));
    }
    return theta * e0;
}

EnvParams EnvPrior::mean() const {
    std::array<double, EnvParams::dim> v{};
    for (int k = 0; k < EnvParams::dim; ++k) v[static_cast<std::size_t>(k)] = marginals[static_cast<std::size_t>(k)].mean;
    return EnvParams::from_array(v);
}

std::array<double, EnvParams::dim> EnvPrior::sd() const {
    std::array<double, EnvParams::dim> v{};
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = marginals[k].sd();
    return v;
}

EnvParams EnvPrior::sample(Rng& rng) const {
    for (;;) {
        std::array<double, EnvParams::dim> v{};
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = marginals[k].sample(rng);
        const EnvParams p = EnvParams::from_array(v);
        if (p.transition_width > 0.0) return p;
    }
}

double EnvPrior::log_density(const EnvParams& params) const {
    if (!(params.transition_width > 0.0)) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto v = params.to_array();
    double lp = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) lp += marginals[k].log_density(v[k]);
    return lp;
}

double TemperatureModel::deterministic(double time_years) const {
    return mean + amplitude * std::sin(2.0 * std::numbers::pi * (time_years - phase));
}

double TemperatureModel::sample(double time_years, Rng& rng) const {
    return deterministic(time_years) + noise_sd * standard_normal(rng);
}

double sample_ambient_temperature(const TemperatureModel& model, double time_years, Rng& rng) {
    if (!(time_years >= 0.0)) {
        throw DomainError("time must be non-negative");
    }
    return model.sample(time_years, rng);
}

bool UndamagedModalDataset::spans_freezing() const {
    bool below = false;
    bool above = false;
    for (const auto& r : records) {
        below = below || r.temperature < 0.0;
        above = above || r.temperature > 0.0;
    }
    return below && above;
}

UndamagedModalDataset synthesize_undamaged_dataset(const EnvParams& truth, const ModalPredictor& predictor,
                                                   double e0, int n_t, double c_lambda,
                                                   const TemperatureModel& temperature, Rng& rng) {
    if (n_t < 2) {
        throw DomainError("an undamaged dataset needs at least two records");
    }
    UndamagedModalDataset data;
    data.records.reserve(static_cast<std::size_t>(n_t));
    std::vector<double> clean(static_cast<std::size_t>(predictor.n_modes()));
    for (int t = 0; t < n_t; ++t) {
        ModalRecord record;
        record.temperature = temperature.sample(uniform01(rng), rng);
        predictor.eigenvalues(0.0, effective_youngs_modulus(truth, record.temperature, e0), clean);
        record.eigenvalues.resize(clean.size());
        for (std::size_t m = 0; m < clean.size(); ++m) {
            record.eigenvalues[m] = clean[m] * (1.0 + c_lambda * standard_normal(rng));
        }
        std::sort(record.eigenvalues.begin(), record.eigenvalues.end());
        data.records.push_back(std::move(record));
    }
    return data;
}

double env_log_likelihood(const UndamagedModalDataset& data, const EnvParams& params,
                          const ModalPredictor& predictor, double e0, double c_lambda) {
    static const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    std::vector<double> predicted(static_cast<std::size_t>(predictor.n_modes()));
    double ll = 0.0;
    for (const auto& record : data.records) {
        const double theta = theta_of_temperature(params, record.temperature);
        if (!(theta > 0.0)) {
            return -std::numeric_limits<double>::infinity();
        }
        predictor.eigenvalues(0.0, theta * e0, predicted);
        const std::size_t n = std::min(predicted.size(), record.eigenvalues.size());
        for (std::size_t m = 0; m < n; ++m) {
            const double obs = record.eigenvalues[m];
            const double sd = c_lambda * obs;
            const double z = (obs - predicted[m]) / sd;
            ll += -0.5 * z * z - std::log(sd) - half_log_2pi;
        }
    }
    return ll;
}

EnvPosterior learn_env_posterior(const UndamagedModalDataset& data, const EnvPrior& prior,
                                 const ModalPredictor& predictor, double e0, double c_lambda,
                                 const TmcmcSettings& settings, Rng& rng) {
    if (settings.n_samples < 500) {
        throw InferenceError("environmental posterior needs at least 500 samples");
    }
    const auto to_params = [](const Eigen::VectorXd& v) {
        return EnvParams{v(0), v(1), v(2), v(3), v(4)};
    };
    const PriorSamplerFn sample_prior = [&prior](Rng& r) {
        const auto a = prior.sample(r).to_array();
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(a.data(), EnvParams::dim));
    };
    const LogDensityFn log_prior = [&](const Eigen::VectorXd& v) { return prior.log_density(to_params(v)); };
    const LogDensityFn log_lik = [&](const Eigen::VectorXd& v) {
        return env_log_likelihood(data, to_params(v), predictor, e0, c_lambda);
    };

    const TmcmcResult run = run_tmcmc(sample_prior, log_prior, log_lik, EnvParams::dim, settings, rng);

    EnvPosterior posterior;
    posterior.stages = run.stages;
    posterior.acceptance_rate = run.acceptance_rate;
    posterior.log_evidence = run.log_evidence;
    posterior.weights = run.weights;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(EnvParams::dim);
    for (Eigen::Index i = 0; i < run.samples.rows(); ++i) {
        const Eigen::VectorXd row = run.samples.row(i).transpose();
        posterior.samples.push_back(to_params(row));
        mean += run.weights[static_cast<std::size_t>(i)] * row;
    }
    Eigen::VectorXd var = Eigen::VectorXd::Zero(EnvParams::dim);
    for (Eigen::Index i = 0; i < run.samples.rows(); ++i) {
        const Eigen::VectorXd d = run.samples.row(i).transpose() - mean;
        var += run.weights[static_cast<std::size_t>(i)] * d.cwiseProduct(d);
    }
    posterior.mean = to_params(mean);
    for (int k = 0; k < EnvParams::dim; ++k) posterior.sd[static_cast<std::size_t>(k)] = std::sqrt(var(k));
    return posterior;
}

ThetaCurve posterior_theta_curve(const EnvPosterior& posterior) {
    if (posterior.samples.empty()) {
        throw InferenceError("posterior has no samples");
    }
    return ThetaCurve(posterior.mean);
}

nlohmann::json env_params_to_json(const EnvParams& p) {
    return {{"slope", p.slope},
            {"intercept", p.intercept},
            {"step_size", p.step_size},
            {"transition_center", p.transition_center},
            {"transition_width", p.transition_width}};
}

EnvParams env_params_from_json(const nlohmann::json& j) {
    return EnvParams{j.at("slope").get<double>(), j.at("intercept").get<double>(),
                     j.at("step_size").get<double>(), j.at("transition_center").get<double>(),
                     j.at("transition_width").get<double>()};
}

nlohmann::json EnvPosterior::to_json() const {
    nlohmann::json doc;
    doc["format"] = "voshm-env-posterior";
    doc["mean"] = env_params_to_json(mean);
    doc["sd"] = sd;
    doc["stages"] = stages;
    doc["acceptance_rate"] = acceptance_rate;
    doc["log_evidence"] = log_evidence;
    doc["weights"] = weights;
    auto rows = nlohmann::json::array();
    for (const auto& s : samples) rows.push_back(s.to_array());
    doc["samples"] = std::move(rows);
    doc["sample_columns"] = {"slope", "intercept", "step_size", "transition_center", "transition_width"};
    return doc;
}

EnvPosterior EnvPosterior::from_json(const nlohmann::json& doc) {
    EnvPosterior p;
    try {
        p.mean = env_params_from_json(doc.at("mean"));
        p.sd = doc.at("sd").get<std::array<double, EnvParams::dim>>();
        p.stages = doc.value("stages", 0);
        p.acceptance_rate = doc.value("acceptance_rate", 0.0);
        p.log_evidence = doc.value("log_evidence", 0.0);
        p.weights = doc.at("weights").get<std::vector<double>>();
        for (const auto& row : doc.at("samples")) {
            p.samples.push_back(EnvParams::from_array(row.get<std::array<double, EnvParams::dim>>()));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw InferenceError(fmt::format("malformed posterior document: {}", ex.what()));
    }
    return p;
}

}  // namespace voshm
