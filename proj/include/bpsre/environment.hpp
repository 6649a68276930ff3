#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bpsre/offspring.hpp"
#include "bpsre/rng.hpp"

namespace bpsre {

/// Law of the gap d between consecutive marks; support is {1, 2, ...}.
class GapLaw {
  public:
    enum class Kind { pmf, geometric, zeta };

    /// weights[k] = P{d = k}; weights[0] must be zero.
    static GapLaw pmf(std::vector<double> weights);
    static GapLaw constant(std::uint64_t d);
    /// Geometric on {1, 2, ...} with the given mean (>= 1).
    static GapLaw geometric(double mean);
    /// P{d = k} proportional to k^-exponent; exponent > 2 so the mean is finite.
    static GapLaw zeta(double exponent);

    Kind kind() const noexcept { return kind_; }
    double parameter() const noexcept { return param_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    double mean() const noexcept { return mean_; }
    double probability(std::uint64_t d) const;
    /// P{d > n}.
    double tail(std::uint64_t n) const;
    /// E d^p, +inf when divergent.
    double moment(double p) const;
    /// Least D with P{d > D} <= tail_mass, capped at max_point.
    std::uint64_t truncation_point(double tail_mass, std::uint64_t max_point = 10'000'000) const;

    std::uint64_t sample(Philox& rng) const;

  private:
    struct Alias;
    GapLaw() = default;

    Kind kind_ = Kind::pmf;
    double param_ = 0.0;
    double mean_ = 0.0;
    double zeta_norm_ = 0.0;
    std::vector<double> weights_;
    std::shared_ptr<const Alias> alias_;
};

/// Sum_{k > n} k^-s via direct summation plus an Euler-Maclaurin tail.
double zeta_tail(double s, std::uint64_t n);

/// Rule producing the random offspring law nu at each mark.
///
/// Every built-in rule is a finite mixture of laws ("atoms"), which makes
/// E log A and Var log A exactly computable.
class NuGenerator {
  public:
    enum class Kind { fixed, lf_two_point, lf_discrete_gaussian, choice };

    static NuGenerator fixed(OffspringLaw law);
    /// Linear-fractional law with log A = +-c, each with probability 1/2.
    static NuGenerator lf_two_point(double c);
    /// Linear-fractional law with log A on a symmetric grid carrying
    /// Gaussian weights, scaled so Var log A = sd^2.
    static NuGenerator lf_discrete_gaussian(double sd);
    static NuGenerator choice(std::vector<OffspringLaw> laws, std::vector<double> probabilities);

    Kind kind() const noexcept { return kind_; }
    double parameter() const noexcept { return param_; }
    const std::vector<OffspringLaw>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& probabilities() const noexcept { return probs_; }

    /// True when E log A = 0 holds by symmetry of the log-mean law.
    bool symmetric_log_mean() const noexcept {
        return kind_ == Kind::lf_two_point || kind_ == Kind::lf_discrete_gaussian;
    }
    double mean_log_a() const noexcept { return mean_log_a_; }
    double var_log_a() const noexcept { return var_log_a_; }

    std::size_t sample_index(Philox& rng) const;

  private:
    struct Alias;
    NuGenerator() = default;
    void finish();

    Kind kind_ = Kind::fixed;
    double param_ = 0.0;
    std::vector<OffspringLaw> atoms_;
    std::vector<double> probs_;
    double mean_log_a_ = 0.0;
    double var_log_a_ = 0.0;
    std::shared_ptr<const Alias> alias_;
};

/// Joint law of (d, nu) together with the plain law mu.
class EnvironmentModel {
  public:
    /// Throws std::invalid_argument if mean(mu) differs from 1 by more than 1e-12.
    EnvironmentModel(GapLaw gaps, NuGenerator nu, OffspringLaw mu);

    const GapLaw& gaps() const noexcept { return gaps_; }
    const NuGenerator& nu() const noexcept { return nu_; }
    const OffspringLaw& mu() const noexcept { return mu_; }

    /// m = E d.
    double m() const noexcept { return gaps_.mean(); }
    /// v^2 = Var log A.
    double v2() const noexcept { return nu_.var_log_a(); }

  private:
    GapLaw gaps_;
    NuGenerator nu_;
    OffspringLaw mu_;
};

using ModelPtr = std::shared_ptr<const EnvironmentModel>;

/// A realised environment: gaps d_1..d_K, marks S_0..S_K and the laws
/// nu_1..nu_K. Extends lazily; earlier entries never change because gaps
/// and laws come from separate sequential streams.
class SparseEnvironment {
  public:
    /// Extendable environment drawing from the given streams.
    SparseEnvironment(ModelPtr model, Philox gap_stream, Philox law_stream);
    /// Fixed environment; `law_indices[k-1]` selects the atom used as nu_k.
    /// Throws std::out_of_range if asked to extend.
    SparseEnvironment(ModelPtr model, std::vector<std::uint64_t> gaps,
                      std::vector<std::size_t> law_indices);

    const EnvironmentModel& model() const noexcept { return *model_; }

    /// Number K of realised (d, nu) pairs.
    std::size_t size() const noexcept { return gaps_.size(); }
    const std::vector<std::uint64_t>& gaps() const noexcept { return gaps_; }
    /// marks()[k] = S_k, k = 0..K.
    const std::vector<std::uint64_t>& marks() const noexcept { return marks_; }
    const std::vector<std::size_t>& law_indices() const noexcept { return law_indices_; }

    /// d_k for k >= 1, extending as needed.
    std::uint64_t gap(std::size_t k);
    /// S_k, extending as needed.
    std::uint64_t mark(std::size_t k);
    /// nu_k for k >= 1, extending as needed.
    const OffspringLaw& law(std::size_t k);

    /// Appends pairs until S_K > horizon.
    void extend_to_cover(std::uint64_t horizon);
    /// Appends pairs until K >= k.
    void extend_to_size(std::size_t k);

    /// theta(n) = least k with S_k > n.
    std::size_t first_passage(std::uint64_t n);

  private:
    void append_one();

    ModelPtr model_;
    std::optional<Philox> gap_stream_;
    std::optional<Philox> law_stream_;
    std::vector<std::uint64_t> gaps_;
    std::vector<std::uint64_t> marks_{0};
    std::vector<std::size_t> law_indices_;
};

/// Environment for replicate `replicate` of an experiment, covering `horizon`.
SparseEnvironment draw_environment(const ModelPtr& model, std::uint64_t horizon,
                                   const StreamFactory& streams, std::uint64_t replicate);

struct MonteCarloValue {
    double estimate = 0.0;
    double standard_error = 0.0;
};

struct AssumptionReport {
    // (A1)
    double mean_log_a = 0.0;  ///< exact, from the atoms of nu
    MonteCarloValue mean_log_a_mc;
    bool a1_exact = false;
    double var_log_a_declared = 0.0;
    MonteCarloValue var_log_a_mc;
    // (A2)
    double mean_mu = 0.0;
    // (A3)
    double mean_gap = 0.0;
    MonteCarloValue gap_moment_3_2_mc;
    double gap_moment_3_2 = 0.0;  ///< series value, +inf if divergent
    bool a3_violated = false;
    // (A4)
    std::uint64_t kappa_level = 1;
    MonteCarloValue log_kappa4_mc;
    double log_kappa4 = 0.0;  ///< exact, from the atoms of nu

    std::vector<std::string> flags;
};

/// Checks (A1)-(A4) numerically. Violations are flagged, never fatal.
AssumptionReport check_assumptions(const EnvironmentModel& model, std::uint64_t sample_size,
                                   Philox& rng, std::uint64_t kappa_level = 1);

/// Named critical models shipped with the tool.
struct BuiltinModel {
    std::string name;
    ModelPtr model;
};
std::vector<BuiltinModel> builtin_models();
/// Throws std::out_of_range for unknown names.
ModelPtr builtin_model(const std::string& name);

}  // namespace bpsre
