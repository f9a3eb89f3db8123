#include "voshm/random.hpp"

#include <cmath>
#include <numbers>

namespace voshm {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, StreamId stream) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ index);
    return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

Rng make_rng(std::uint64_t seed, std::uint64_t index, StreamId stream) {
    return Rng(derive_seed(seed, index, stream));
}

double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

double NormalSpec::sd() const { return std::abs(mean) * cv; }

double NormalSpec::sample(Rng& rng) const { return mean + sd() * standard_normal(rng); }

double NormalSpec::log_density(double value) const {
    const double s = sd();
    const double z = (value - mean) / s;
    return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double LogNormalSpec::sigma() const { return std::sqrt(std::log1p(cv * cv)); }

double LogNormalSpec::mu() const {
    const double s = sigma();
    return std::log(mean) - 0.5 * s * s;
}

double LogNormalSpec::sample(Rng& rng) const {
    return std::exp(mu() + sigma() * standard_normal(rng));
}

double LogNormalSpec::second_moment() const { return mean * mean * (1.0 + cv * cv); }

}  // namespace voshm
