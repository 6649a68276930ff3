#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bpsre/count.hpp"
#include "bpsre/environment.hpp"
#include "bpsre/offspring.hpp"
#include "bpsre/rng.hpp"

namespace bpsre {

struct SimOptions {
    /// Parent cap for exact ExplicitPmf sum sampling.
    std::uint64_t parent_cap = kDefaultParentCap;
};

/// Population path Z_0, Z_1, ..., absorbed at 0.
struct Trajectory {
    std::vector<Count> values;
    std::uint64_t n_max = 0;
    std::optional<std::uint64_t> extinction;
};

/// Population observed at the marks: Z_{S_0}, Z_{S_1}, ...
struct EmbeddedTrajectory {
    std::vector<Count> values;
    std::uint64_t k_max = 0;
    std::optional<std::uint64_t> extinction;
};

/// First zero, or censoring at the horizon.
struct ExtinctionTime {
    std::optional<std::uint64_t> time;
    std::uint64_t horizon = 0;

    bool censored() const noexcept { return !time.has_value(); }
    /// True when the population is still alive at generation n (n <= horizon).
    bool alive_at(std::uint64_t n) const noexcept { return !time || *time > n; }
};

ExtinctionTime extinction_time(const Trajectory& trajectory);
ExtinctionTime extinction_time(const EmbeddedTrajectory& trajectory);

/// Core BPSRE recursion on a (lazily extended) environment.
///
/// Generation n reproduces with nu_{k+1} when n = S_k for some k >= 0 and
/// with mu otherwise. `observe(n, Z_n)` is called for n = 0 .. last
/// simulated generation. Returns the extinction generation, if reached by
/// n_max.
template <class Observer>
std::optional<std::uint64_t> evolve_bpsre(SparseEnvironment& env, std::uint64_t n_max, Philox& rng,
                                          const SimOptions& options, Observer&& observe) {
    const OffspringLaw& mu = env.model().mu();
    Count z{1};
    observe(std::uint64_t{0}, z);
    std::size_t k = 0;
    std::uint64_t next_mark = env.mark(0);
    for (std::uint64_t n = 0; n < n_max; ++n) {
        if (n == next_mark) {
            const OffspringLaw& nu = env.law(k + 1);
            z = nu.sample_total(z, rng, options.parent_cap);
            ++k;
            next_mark = env.mark(k);
        } else {
            z = mu.sample_total(z, rng, options.parent_cap);
        }
        observe(n + 1, z);
        if (z.is_zero()) {
            return n + 1;
        }
    }
    return std::nullopt;
}

/// BPSRE trajectory on the environment of replicate `replicate`.
std::pair<Trajectory, SparseEnvironment> simulate_bpsre(const ModelPtr& model, std::uint64_t n_max,
                                                        const StreamFactory& streams,
                                                        std::uint64_t replicate,
                                                        const SimOptions& options = {});

/// Same recursion on a caller-supplied environment.
Trajectory simulate_bpsre(SparseEnvironment& env, std::uint64_t n_max, Philox& rng,
                          const SimOptions& options = {});

/// Plain Galton-Watson process with offspring law mu.
Trajectory simulate_gw(const OffspringLaw& mu, std::uint64_t n_max, Philox& rng,
                       const SimOptions& options = {});

/// Branching process with a given law per generation: generation i uses laws[i].
Trajectory simulate_quenched(const std::vector<OffspringLaw>& laws, Philox& rng,
                             const SimOptions& options = {});

/// Sum over `parents` independent Galton-Watson lines (law mu) of the line
/// size after `generations` steps. Uses the closed-form iterate of the
/// critical linear-fractional law when available.
Count sample_gw_generations(const OffspringLaw& mu, const Count& parents,
                            std::uint64_t generations, Philox& rng,
                            const SimOptions& options = {});

/// Z_n at the given nondecreasing generations (zero after extinction).
/// Mark-free stretches are crossed in one sample_gw_generations call, so
/// the cost is O(marks) for the critical linear-fractional mu.
std::vector<Count> sample_at_generations(SparseEnvironment& env,
                                         std::span<const std::uint64_t> generations, Philox& rng,
                                         const SimOptions& options = {});

enum class EmbeddedMethod {
    /// Run the BPSRE generation by generation and read it at the marks.
    restriction,
    /// Mark-to-mark: nu-reproduction followed by a d-1 generation GW block.
    direct,
};

EmbeddedTrajectory simulate_embedded(SparseEnvironment& env, std::uint64_t k_max, Philox& rng,
                                     EmbeddedMethod method, const SimOptions& options = {});

EmbeddedTrajectory simulate_embedded(const ModelPtr& model, std::uint64_t k_max,
                                     const StreamFactory& streams, std::uint64_t replicate,
                                     EmbeddedMethod method = EmbeddedMethod::direct,
                                     const SimOptions& options = {});

/// CSV with columns generation,population,is_mark.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const SparseEnvironment& env);

}  // namespace bpsre
