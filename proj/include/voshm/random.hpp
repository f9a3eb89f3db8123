#pragma once

#include <cstdint>
#include <random>

namespace voshm {

using Rng = std::mt19937_64;

/// Independent random streams of one Monte Carlo scenario.
enum class StreamId : std::uint64_t {
    scenario = 1,     // deterioration path and temperatures
    environment = 2,  // environmental truth and undamaged dataset
    inspection = 3,
    shm = 4,
    filter = 5,
    learning = 6,     // posterior sampler of the environmental model
    auxiliary = 7,
};

/// Counter-based seed: a splitmix64 hash of (seed, index, stream).
/// Results never depend on which worker runs a scenario.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, StreamId stream);

Rng make_rng(std::uint64_t seed, std::uint64_t index, StreamId stream);

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

/// Normal distribution parameterized by mean and coefficient of variation.
struct NormalSpec {
    double mean = 0.0;
    double cv = 0.0;

    double sd() const;
    double sample(Rng& rng) const;
    double log_density(double value) const;
};

/// Lognormal distribution given by its (mean, cv) on the natural scale.
struct LogNormalSpec {
    double mean = 1.0;
    double cv = 0.0;

    double mu() const;
    double sigma() const;
    double sample(Rng& rng) const;
    double second_moment() const;
};

}  // namespace voshm
