#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bpsre/environment.hpp"
#include "bpsre/offspring.hpp"

namespace bpsre {

/// One realised embedded offspring law: nu followed by d-1 plain mu
/// generations, d drawn from the gap law.
struct EmbeddedLawView {
    OffspringLaw nu;
    GapLaw gaps;
    OffspringLaw mu;
};

/// A value computed with a truncated gap law; `residual` bounds the
/// truncation error (the dropped tail mass, or moment, as documented).
struct TruncatedValue {
    double value = 0.0;
    double residual = 0.0;
};

class UnsupportedVariant : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Gap truncation with tail mass <= 1e-12 (capped for heavy tails).
std::uint64_t default_gap_truncation(const GapLaw& gaps);

/// g~(s) = E s^{Z~_{d-1}} = sum_d P{d} f_mu^{o(d-1)}(s).
TruncatedValue g_tilde(const EmbeddedLawView& view, double s, std::uint64_t d_truncation);

/// f_nu~(s) = f_nu(g~(s)). Each individual's line is averaged over d
/// separately; a block of the process shares one d, so this is its one-step
/// law only when d is deterministic or nu has at most one individual.
TruncatedValue embedded_pgf(const EmbeddedLawView& view, double s, std::uint64_t d_truncation);

/// A_nu~ = A_nu (requires mean(mu) = 1).
double embedded_mean(const EmbeddedLawView& view);

/// sigma_nu + sigma_mu (E d - 1) / A_nu.
double embedded_sigma(const EmbeddedLawView& view);

/// First and second derivative at s = 1 of a function on [0, 1], from
/// backward differences with Richardson extrapolation.
struct DerivativesAtOne {
    double first = 0.0;
    double second = 0.0;
};
template <class F>
DerivativesAtOne derivatives_at_one(F&& f);

/// Numerical A_nu~ and sigma_nu~ from embedded_pgf.
struct EmbeddedMoments {
    double mean = 0.0;
    double sigma = 0.0;
    double residual = 0.0;  ///< gap tail mass dropped by the truncation
};
EmbeddedMoments embedded_moments_numeric(const EmbeddedLawView& view, std::uint64_t d_truncation);

/// Numerical g~'(1) (equals 1 for critical mu and E d < infinity).
double g_tilde_slope_numeric(const EmbeddedLawView& view, std::uint64_t d_truncation);

struct EmbeddedPmf {
    std::vector<double> pmf;  ///< P{nu~ = j}, j = 0..cutoff
    double residual_mass = 0.0;
};

/// pmf of nu~ by compound convolution; needs explicit-pmf nu and mu.
/// Throws UnsupportedVariant otherwise.
EmbeddedPmf embedded_pmf(const EmbeddedLawView& view, std::uint64_t d_truncation,
                         std::size_t support_cutoff);

struct EmbeddedKappa {
    double value = 0.0;
    /// Upper bound on the omitted part of kappa: exact second moment of
    /// nu~ minus the part captured below the cutoff, over A^2.
    double residual = 0.0;
    double residual_mass = 0.0;
};

/// kappa(f_nu~; a) from the truncated embedded pmf.
EmbeddedKappa embedded_kappa(const EmbeddedLawView& view, std::uint64_t a,
                             std::uint64_t d_truncation, std::size_t support_cutoff = 4096);

template <class F>
DerivativesAtOne derivatives_at_one(F&& f) {
    constexpr int kLevels = 8;
    constexpr double kH0 = 0.05;
    double d1[kLevels][kLevels];
    double d2[kLevels][kLevels];
    const double f1 = f(1.0);
    double h = kH0;
    for (int i = 0; i < kLevels; ++i, h *= 0.5) {
        const double a = f(1.0 - h);
        const double b = f(1.0 - 2.0 * h);
        d1[i][0] = (f1 - a) / h;
        d2[i][0] = (f1 - 2.0 * a + b) / (h * h);
        double factor = 1.0;
        for (int j = 1; j <= i; ++j) {
            factor *= 2.0;
            d1[i][j] = d1[i][j - 1] + (d1[i][j - 1] - d1[i - 1][j - 1]) / (factor - 1.0);
            d2[i][j] = d2[i][j - 1] + (d2[i][j - 1] - d2[i - 1][j - 1]) / (factor - 1.0);
        }
    }
    return {d1[kLevels - 1][kLevels - 1], d2[kLevels - 1][kLevels - 1]};
}

}  // namespace bpsre
