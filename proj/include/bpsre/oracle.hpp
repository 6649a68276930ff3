#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpsre/environment.hpp"
#include "bpsre/offspring.hpp"
#include "bpsre/rng.hpp"

namespace bpsre {

/// Explicit per-generation laws g_0..g_{n-1} for exact computations.
class QuenchedSpec {
  public:
    static constexpr std::size_t kMaxLength = 64;

    /// Throws std::invalid_argument unless every law is an explicit pmf and
    /// there are at most kMaxLength of them.
    explicit QuenchedSpec(std::vector<OffspringLaw> laws);

    const std::vector<OffspringLaw>& laws() const noexcept { return laws_; }
    std::size_t size() const noexcept { return laws_.size(); }

  private:
    std::vector<OffspringLaw> laws_;
};

/// P{Z_n > 0} = 1 - g_0(g_1(...g_{n-1}(0)...)). Throws std::out_of_range
/// if n exceeds the spec length.
double exact_survival_quenched(const QuenchedSpec& spec, std::size_t n);

struct PopulationPmf {
    std::vector<double> pmf;  ///< P{Z_n = j}, j = 0..cutoff
    double residual_mass = 0.0;
    bool cutoff_too_small = false;  ///< residual_mass > 1e-9
    bool exact_arithmetic = false;  ///< computed in rationals
};

/// Law of Z_n by iterated compound convolution. Uses exact rationals when
/// every weight is a multiple of 2^-16 and the cutoff is at most 256.
PopulationPmf exact_population_pmf(const QuenchedSpec& spec, std::size_t n,
                                   std::size_t support_cutoff);

struct BinomialTailCheck {
    double exact = 0.0;
    double bound = 0.0;
    bool holds = false;
};

/// P{0 < Bin(N, p)/N <= x} against p(1-p)x/(p-x)^2. Throws
/// std::domain_error unless 0 < x < p < 1 and N >= 1.
BinomialTailCheck check_binomial_tail_lemma(std::uint64_t N, double p, double x);

struct BinomialSweep {
    std::uint64_t cases = 0;
    std::uint64_t failures = 0;
    double max_exact_over_bound = 0.0;
    bool all_hold() const noexcept { return failures == 0; }
};

/// N in 1..max_n, p in {0.1..0.9}, x in {p/10..9p/10}.
BinomialSweep binomial_tail_sweep(std::uint64_t max_n = 200);

struct MaxLemmaCheck {
    double estimate = 0.0;
    double standard_error = 0.0;
    double bound = 0.0;  ///< 1 + E d
    /// Exact E max when the gap law has finite support and the enumeration fits.
    std::optional<double> exact;
    /// estimate - 3 se <= bound, and exact <= bound when available.
    bool holds = false;
};

/// E max_{0<=k<=d} Z~_k for a GW process Z~ with law mu started at 1.
/// Throws std::invalid_argument unless mean(mu) = 1.
MaxLemmaCheck check_max_lemma(const OffspringLaw& mu, const GapLaw& gaps, std::uint64_t mc_reps,
                              Philox& rng);

/// Exact E max by enumeration; nullopt when mu or the gap law is not a finite
/// pmf or the state space exceeds `max_states`.
std::optional<double> exact_max_expectation(const OffspringLaw& mu, const GapLaw& gaps,
                                            std::size_t max_states = 200000);

struct MaxLemmaSweepRow {
    std::string model;
    MaxLemmaCheck check;
};

/// check_max_lemma on every built-in model; replicate streams from `seed`.
std::vector<MaxLemmaSweepRow> max_lemma_sweep(std::uint64_t mc_reps, std::uint64_t seed);

}  // namespace bpsre
