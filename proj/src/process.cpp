#include "bpsre/process.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <boost/random/binomial_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace bpsre {

namespace {

template <class Values>
std::optional<std::uint64_t> first_zero(const Values& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].is_zero()) {
            return i;
        }
    }
    return std::nullopt;
}

bool is_critical_lf(const OffspringLaw& law) {
    return law.kind() == OffspringLaw::Kind::linear_fractional && law.mean() == 1.0;
}

// Critical geometric law f(s) = 1/(2-s): after j generations a line is
// extinct w.p. j/(j+1), otherwise geometric on {1,2,...} with success
// probability 1/(j+1).
Count lf_critical_generations(const Count& parents, std::uint64_t j, Philox& rng) {
    const double p = 1.0 / (static_cast<double>(j) + 1.0);
    const std::uint64_t n = parents.u64();
    boost::random::binomial_distribution<std::int64_t, double> survive(static_cast<std::int64_t>(n), p);
    const auto r = static_cast<std::uint64_t>(survive(rng));
    if (r == 0) {
        return Count{};
    }
    boost::random::gamma_distribution<double> gamma(static_cast<double>(r),
                                                    static_cast<double>(j));
    const double lambda = gamma(rng);
    std::uint64_t extra = 0;
    if (lambda > 0.0) {
        boost::random::poisson_distribution<std::uint64_t, double> poisson(lambda);
        extra = poisson(rng);
    }
    return Count{r + extra};
}

}  // namespace

ExtinctionTime extinction_time(const Trajectory& trajectory) {
    return {first_zero(trajectory.values), trajectory.n_max};
}

ExtinctionTime extinction_time(const EmbeddedTrajectory& trajectory) {
    return {first_zero(trajectory.values), trajectory.k_max};
}

Trajectory simulate_bpsre(SparseEnvironment& env, std::uint64_t n_max, Philox& rng,
                          const SimOptions& options) {
    env.extend_to_cover(n_max);
    Trajectory t;
    t.n_max = n_max;
    t.values.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n_max + 1, 1 << 20)));
    t.extinction = evolve_bpsre(env, n_max, rng, options,
                                [&](std::uint64_t, const Count& z) { t.values.push_back(z); });
    // Absorbed: the remaining generations are zero.
    t.values.resize(n_max + 1);
    return t;
}

std::pair<Trajectory, SparseEnvironment> simulate_bpsre(const ModelPtr& model, std::uint64_t n_max,
                                                        const StreamFactory& streams,
                                                        std::uint64_t replicate,
                                                        const SimOptions& options) {
    auto env = draw_environment(model, n_max, streams, replicate);
    auto rng = streams.stream(replicate, StreamRole::population);
    auto t = simulate_bpsre(env, n_max, rng, options);
    return {std::move(t), std::move(env)};
}

Trajectory simulate_gw(const OffspringLaw& mu, std::uint64_t n_max, Philox& rng,
                       const SimOptions& options) {
    Trajectory t;
    t.n_max = n_max;
    t.values.assign(n_max + 1, Count{});
    Count z{1};
    t.values[0] = z;
    for (std::uint64_t n = 0; n < n_max; ++n) {
        z = mu.sample_total(z, rng, options.parent_cap);
        t.values[n + 1] = z;
        if (z.is_zero()) {
            t.extinction = n + 1;
            break;
        }
    }
    return t;
}

Trajectory simulate_quenched(const std::vector<OffspringLaw>& laws, Philox& rng,
                             const SimOptions& options) {
    Trajectory t;
    t.n_max = laws.size();
    t.values.assign(laws.size() + 1, Count{});
    Count z{1};
    t.values[0] = z;
    for (std::size_t n = 0; n < laws.size(); ++n) {
        z = laws[n].sample_total(z, rng, options.parent_cap);
        t.values[n + 1] = z;
        if (z.is_zero()) {
            t.extinction = n + 1;
            break;
        }
    }
    return t;
}

Count sample_gw_generations(const OffspringLaw& mu, const Count& parents,
                            std::uint64_t generations, Philox& rng, const SimOptions& options) {
    if (generations == 0 || parents.is_zero()) {
        return parents;
    }
    if (!parents.fits_u64() || parents.u64() > kExactParentLimit) {
        if (std::abs(mu.mean() - 1.0) <= 1e-12) {
            // Critical GW: the j-step line size has mean 1 and variance j Var(mu).
            return sample_gaussian_total(parents, 1.0,
                                         static_cast<double>(generations) * mu.variance(), rng);
        }
    } else if (is_critical_lf(mu)) {
        return lf_critical_generations(parents, generations, rng);
    }
    Count z = parents;
    for (std::uint64_t g = 0; g < generations && !z.is_zero(); ++g) {
        z = mu.sample_total(z, rng, options.parent_cap);
    }
    return z;
}

std::vector<Count> sample_at_generations(SparseEnvironment& env,
                                         std::span<const std::uint64_t> generations, Philox& rng,
                                         const SimOptions& options) {
    if (!std::is_sorted(generations.begin(), generations.end())) {
        throw std::invalid_argument("generations must be nondecreasing");
    }
    const OffspringLaw& mu = env.model().mu();
    std::vector<Count> out(generations.size());
    Count z{1};
    std::uint64_t n = 0;
    std::size_t k = 0;  // S_k is the first mark >= n
    for (std::size_t i = 0; i < generations.size(); ++i) {
        const std::uint64_t target = generations[i];
        while (n < target && !z.is_zero()) {
            const std::uint64_t mark = env.mark(k);
            if (n == mark) {
                z = env.law(k + 1).sample_total(z, rng, options.parent_cap);
                ++k;
                ++n;
            } else {
                const std::uint64_t stop = std::min(target, mark);
                z = sample_gw_generations(mu, z, stop - n, rng, options);
                n = stop;
            }
        }
        if (z.is_zero()) {
            break;
        }
        out[i] = z;
    }
    return out;
}

EmbeddedTrajectory simulate_embedded(SparseEnvironment& env, std::uint64_t k_max, Philox& rng,
                                     EmbeddedMethod method, const SimOptions& options) {
    EmbeddedTrajectory out;
    out.k_max = k_max;
    out.values.assign(k_max + 1, Count{});
    out.values[0] = Count{1};

    if (method == EmbeddedMethod::restriction) {
        const std::uint64_t horizon = env.mark(k_max);
        std::size_t next = 1;
        const auto ext = evolve_bpsre(env, horizon, rng, options,
                                      [&](std::uint64_t n, const Count& z) {
                                          while (next <= k_max && env.marks()[next] == n) {
                                              out.values[next] = z;
                                              ++next;
                                          }
                                      });
        (void)ext;
    } else {
        const OffspringLaw& mu = env.model().mu();
        Count z{1};
        for (std::size_t k = 1; k <= k_max; ++k) {
            const OffspringLaw& nu = env.law(k);
            const std::uint64_t d = env.gap(k);
            z = nu.sample_total(z, rng, options.parent_cap);
            z = sample_gw_generations(mu, z, d - 1, rng, options);
            out.values[k] = z;
            if (z.is_zero()) {
                break;
            }
        }
    }
    out.extinction = first_zero(out.values);
    return out;
}

EmbeddedTrajectory simulate_embedded(const ModelPtr& model, std::uint64_t k_max,
                                     const StreamFactory& streams, std::uint64_t replicate,
                                     EmbeddedMethod method, const SimOptions& options) {
    SparseEnvironment env(model, streams.stream(replicate, StreamRole::gaps),
                          streams.stream(replicate, StreamRole::laws));
    auto rng = streams.stream(replicate, StreamRole::population);
    return simulate_embedded(env, k_max, rng, method, options);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const SparseEnvironment& env) {
    out << "generation,population,is_mark\n";
    const auto& marks = env.marks();
    for (std::size_t n = 0; n < trajectory.values.size(); ++n) {
        const bool is_mark = std::binary_search(marks.begin(), marks.end(), n);
        out << n << ',' << trajectory.values[n].to_string() << ',' << (is_mark ? 1 : 0) << '\n';
    }
}

}  // namespace bpsre
