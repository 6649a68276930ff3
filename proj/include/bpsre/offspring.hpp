#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "bpsre/count.hpp"
#include "bpsre/rng.hpp"

namespace bpsre {

/// Above this many parents ExplicitPmf sums switch to the Gaussian
/// approximation unless the caller raises the cap.
inline constexpr std::uint64_t kDefaultParentCap = std::uint64_t{1} << 16;
inline constexpr std::uint64_t kUnlimitedParentCap = std::numeric_limits<std::uint64_t>::max();

/// Largest parent count for which sums are drawn from exact samplers.
/// Beyond it every law uses the Gaussian approximation of the sum with a
/// high-precision mean (relative fluctuation is then below 1e-6).
inline constexpr std::uint64_t kExactParentLimit = std::uint64_t{1} << 40;

/// Probability measure on the nonnegative integers.
///
/// Three families are supported: explicit finite pmfs, the linear-fractional
/// (geometric) law p(k) = (1-s) s^k with s = A/(1+A), and Poisson. Laws are
/// immutable and cheap to copy; sampling state lives in the caller's stream.
class OffspringLaw {
  public:
    enum class Kind { explicit_pmf, linear_fractional, poisson };

    /// weights[k] = P{k}. Must be nonnegative and sum to 1 within 1e-12.
    static OffspringLaw pmf(std::vector<double> weights);
    /// Point mass at k.
    static OffspringLaw degenerate(std::uint64_t k);
    static OffspringLaw linear_fractional(double mean);
    static OffspringLaw poisson(double mean);

    Kind kind() const noexcept { return kind_; }
    /// Only meaningful for explicit_pmf; empty otherwise.
    const std::vector<double>& weights() const noexcept { return weights_; }
    /// Largest support point for finite laws.
    std::optional<std::uint64_t> max_support() const noexcept;
    /// The parameter of the parametric families (their mean).
    double parameter() const noexcept { return param_; }

    double probability(std::uint64_t k) const;

    /// f(s) = sum_j s^j P{j}; throws std::domain_error for s outside [0,1].
    double pgf(double s) const;
    double mean() const noexcept { return mean_; }
    double variance() const noexcept;
    /// Normalised second factorial moment f''(1) / f'(1)^2.
    double sigma() const;
    /// A^{-2} * sum_{j >= a} j^2 P{j}.
    double kappa(std::uint64_t a) const;

    std::uint64_t sample(Philox& rng) const;

    /// Draws the sum of `parents` iid copies.
    Count sample_total(const Count& parents, Philox& rng,
                       std::uint64_t parent_cap = kDefaultParentCap) const;

    bool operator==(const OffspringLaw& other) const noexcept;

  private:
    struct AliasTable;

    OffspringLaw() = default;

    Kind kind_ = Kind::explicit_pmf;
    double param_ = 0.0;
    double mean_ = 0.0;
    std::vector<double> weights_;
    std::shared_ptr<const AliasTable> alias_;
};

/// Sum of `n` draws approximated by round(N(n*mean, n*variance)), clamped at 0.
Count sample_gaussian_total(const Count& n, double mean, double variance, Philox& rng);

}  // namespace bpsre
