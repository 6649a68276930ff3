#include "bpsre/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "pmf_ops.hpp"

namespace bpsre {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kDyadicScale = 65536.0;
constexpr std::size_t kRationalCutoff = 256;

bool is_dyadic(const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double x) {
        const double scaled = x * kDyadicScale;
        return std::floor(scaled) == scaled;
    });
}

Rational to_rational(double x) {
    return Rational(static_cast<std::int64_t>(x * kDyadicScale),
                    static_cast<std::int64_t>(kDyadicScale));
}

template <class Scalar, class Convert>
std::vector<Scalar> population(const QuenchedSpec& spec, std::size_t n, std::size_t cutoff,
                               Convert&& convert) {
    std::vector<Scalar> pmf{Scalar(0), Scalar(1)};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Scalar> inner;
        for (double w : spec.laws()[i].weights()) {
            inner.push_back(convert(w));
        }
        pmf = detail::compound(pmf, inner, cutoff);
    }
    pmf.resize(cutoff + 1, Scalar(0));
    return pmf;
}

void add_power_sum(std::map<std::pair<std::uint64_t, std::uint64_t>, double>& next,
                   const std::vector<double>& sum_pmf, std::uint64_t running_max, double weight) {
    for (std::size_t z = 0; z < sum_pmf.size(); ++z) {
        if (sum_pmf[z] > 0.0) {
            next[{z, std::max<std::uint64_t>(running_max, z)}] += weight * sum_pmf[z];
        }
    }
}

}  // namespace

QuenchedSpec::QuenchedSpec(std::vector<OffspringLaw> laws) : laws_(std::move(laws)) {
    if (laws_.size() > kMaxLength) {
        throw std::invalid_argument("quenched spec longer than 64 generations");
    }
    for (const auto& law : laws_) {
        if (law.kind() != OffspringLaw::Kind::explicit_pmf) {
            throw std::invalid_argument("quenched spec laws must be explicit pmfs");
        }
    }
}

double exact_survival_quenched(const QuenchedSpec& spec, std::size_t n) {
    if (n > spec.size()) {
        throw std::out_of_range("n exceeds quenched spec length");
    }
    double s = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        s = spec.laws()[i].pgf(s);
    }
    return 1.0 - s;
}

PopulationPmf exact_population_pmf(const QuenchedSpec& spec, std::size_t n,
                                   std::size_t support_cutoff) {
    if (n > spec.size()) {
        throw std::out_of_range("n exceeds quenched spec length");
    }
    if (support_cutoff < 1) {
        throw std::invalid_argument("support cutoff must be at least 1");
    }
    PopulationPmf out;
    const bool dyadic = support_cutoff <= kRationalCutoff &&
                        std::all_of(spec.laws().begin(), spec.laws().begin() + static_cast<long>(n),
                                    [](const OffspringLaw& l) { return is_dyadic(l.weights()); });
    if (dyadic) {
        const auto exact = population<Rational>(spec, n, support_cutoff, to_rational);
        Rational total = 0;
        for (const auto& w : exact) {
            out.pmf.push_back(static_cast<double>(w));
            total += w;
        }
        out.residual_mass = static_cast<double>(Rational(1) - total);
        out.exact_arithmetic = true;
    } else {
        out.pmf = population<double>(spec, n, support_cutoff, [](double w) { return w; });
        double total = 0.0;
        for (double w : out.pmf) {
            total += w;
        }
        out.residual_mass = std::max(0.0, 1.0 - total);
    }
    out.cutoff_too_small = out.residual_mass > 1e-9;
    return out;
}

BinomialTailCheck check_binomial_tail_lemma(std::uint64_t N, double p, double x) {
    if (N < 1 || !(p > 0.0 && p < 1.0) || !(x > 0.0) || !(x < p)) {
        throw std::domain_error("binomial tail lemma needs N >= 1 and 0 < x < p < 1");
    }
    const auto kmax = static_cast<std::uint64_t>(std::floor(static_cast<double>(N) * x + 1e-9));
    const boost::math::binomial_distribution<double> bin(static_cast<double>(N), p);
    BinomialTailCheck out;
    for (std::uint64_t k = 1; k <= std::min(kmax, N); ++k) {
        out.exact += boost::math::pdf(bin, static_cast<double>(k));
    }
    out.bound = p * (1.0 - p) * x / ((p - x) * (p - x));
    out.holds = out.exact <= out.bound;
    return out;
}

BinomialSweep binomial_tail_sweep(std::uint64_t max_n) {
    BinomialSweep out;
    for (std::uint64_t N = 1; N <= max_n; ++N) {
        for (int pi = 1; pi <= 9; ++pi) {
            const double p = pi / 10.0;
            for (int xi = 1; xi <= 9; ++xi) {
                const double x = p * xi / 10.0;
                const auto c = check_binomial_tail_lemma(N, p, x);
                ++out.cases;
                if (!c.holds) {
                    ++out.failures;
                }
                out.max_exact_over_bound = std::max(out.max_exact_over_bound, c.exact / c.bound);
            }
        }
    }
    return out;
}

std::optional<double> exact_max_expectation(const OffspringLaw& mu, const GapLaw& gaps,
                                            std::size_t max_states) {
    if (mu.kind() != OffspringLaw::Kind::explicit_pmf || gaps.kind() != GapLaw::Kind::pmf) {
        return std::nullopt;
    }
    const auto& gw = gaps.weights();
    const std::size_t d_max = gw.size() - 1;
    const auto& inner = mu.weights();

    // Joint law of (Z~_k, max_{j<=k} Z~_j).
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> state{{{1, 1}, 1.0}};
    std::map<std::uint64_t, std::vector<double>> powers;  // z -> pmf of z-fold sum
    double expectation = 0.0;
    for (std::size_t k = 0; k <= d_max; ++k) {
        if (k < gw.size() && gw[k] > 0.0) {
            for (const auto& [key, prob] : state) {
                expectation += gw[k] * prob * static_cast<double>(key.second);
            }
        }
        if (k == d_max) {
            break;
        }
        std::map<std::pair<std::uint64_t, std::uint64_t>, double> next;
        for (const auto& [key, prob] : state) {
            const auto [z, running_max] = key;
            if (z == 0) {
                next[key] += prob;
                continue;
            }
            auto it = powers.find(z);
            if (it == powers.end()) {
                std::vector<double> acc{1.0};
                for (std::uint64_t i = 0; i < z; ++i) {
                    acc = detail::truncated_product(acc, inner, max_states);
                }
                it = powers.emplace(z, std::move(acc)).first;
            }
            add_power_sum(next, it->second, running_max, prob);
            if (next.size() > max_states) {
                return std::nullopt;
            }
        }
        state = std::move(next);
    }
    return expectation;
}

MaxLemmaCheck check_max_lemma(const OffspringLaw& mu, const GapLaw& gaps, std::uint64_t mc_reps,
                              Philox& rng) {
    if (std::abs(mu.mean() - 1.0) > 1e-12) {
        throw std::invalid_argument("max lemma needs mean(mu) = 1");
    }
    MaxLemmaCheck out;
    out.bound = 1.0 + gaps.mean();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint64_t r = 0; r < mc_reps; ++r) {
        const std::uint64_t d = gaps.sample(rng);
        Count z{1};
        double best = 1.0;
        for (std::uint64_t k = 0; k < d && !z.is_zero(); ++k) {
            z = mu.sample_total(z, rng);
            best = std::max(best, z.to_double());
        }
        sum += best;
        sum_sq += best * best;
    }
    if (mc_reps > 0) {
        const double n = static_cast<double>(mc_reps);
        out.estimate = sum / n;
        const double var =
            mc_reps > 1 ? std::max(0.0, (sum_sq - n * out.estimate * out.estimate) / (n - 1.0)) : 0.0;
        out.standard_error = std::sqrt(var / n);
    }
    out.exact = exact_max_expectation(mu, gaps);
    out.holds = out.estimate - 3.0 * out.standard_error <= out.bound &&
                (!out.exact || *out.exact <= out.bound + 1e-12);
    return out;
}

std::vector<MaxLemmaSweepRow> max_lemma_sweep(std::uint64_t mc_reps, std::uint64_t seed) {
    std::vector<MaxLemmaSweepRow> rows;
    const StreamFactory streams(seed, "lemmas");
    std::uint64_t index = 0;
    for (const auto& b : builtin_models()) {
        auto rng = streams.stream(index++, StreamRole::auxiliary);
        rows.push_back({b.name, check_max_lemma(b.model->mu(), b.model->gaps(), mc_reps, rng)});
    }
    return rows;
}

}  // namespace bpsre
