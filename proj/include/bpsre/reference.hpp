#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bpsre/rng.hpp"

namespace bpsre {

/// Brownian meander sampled on the uniform grid k/steps, k = 0..steps.
struct MeanderPath {
    std::uint64_t steps = 0;
    std::vector<double> values;
    /// Last zero of the underlying Brownian path on [0, 1].
    double last_zero = 0.0;

    /// Linear interpolation between grid values; t in [0, 1].
    double at(double t) const;
};

/// B+(t) = |B(zeta + t(1 - zeta))| / sqrt(1 - zeta) from a Brownian path on
/// `steps` increments. The last zero zeta is located exactly given the grid
/// skeleton: intervals are scanned backwards and each Brownian-bridge piece
/// is tested for a zero crossing; inside the crossing piece zeta is drawn
/// from the bridge's conditional last-zero law. Throws std::invalid_argument
/// for steps < 2.
MeanderPath sample_meander(std::uint64_t steps, Philox& rng);

/// Meander values at the given times only (same construction).
std::vector<double> sample_meander_at(std::uint64_t steps, std::span<const double> times,
                                      Philox& rng);

/// Inverse Gaussian variate (Michael-Schucany-Haas).
double sample_inverse_gaussian(double mean, double shape, Philox& rng);

/// Rayleigh CDF 1 - exp(-x^2/2), 0 for x < 0.
double rayleigh_cdf(double x);

}  // namespace bpsre
