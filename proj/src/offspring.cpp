#include "bpsre/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/random/binomial_distribution.hpp>
#include <boost/random/discrete_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

namespace bpsre {

struct OffspringLaw::AliasTable {
    boost::random::discrete_distribution<std::uint64_t, double> dist;
};

namespace {

using BigFloat = boost::multiprecision::cpp_bin_float_100;

constexpr std::uint64_t kPerIndividualLimit = 32;

// Compensated Horner evaluation (Graillat-Langlois-Louvet).
double compensated_horner(const std::vector<double>& a, double x) {
    if (a.empty()) {
        return 0.0;
    }
    double r = a.back();
    double c = 0.0;
    for (std::size_t i = a.size() - 1; i-- > 0;) {
        const double p = r * x;
        const double pi = std::fma(r, x, -p);
        const double s = p + a[i];
        const double t = s - p;
        const double sigma = (p - (s - t)) + (a[i] - t);
        r = s;
        c = c * x + (pi + sigma);
    }
    return r + c;
}

std::uint64_t draw_poisson(double mean, Philox& rng) {
    if (!(mean > 0.0)) {
        return 0;
    }
    boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
    return dist(rng);
}

std::uint64_t draw_binomial(std::uint64_t n, double p, Philox& rng) {
    if (n == 0 || p <= 0.0) {
        return 0;
    }
    if (p >= 1.0) {
        return n;
    }
    boost::random::binomial_distribution<std::int64_t, double> dist(static_cast<std::int64_t>(n), p);
    return static_cast<std::uint64_t>(dist(rng));
}

// Inversion for P{K >= j} = s^j.
std::uint64_t draw_geometric(double s, Philox& rng) {
    if (s <= 0.0) {
        return 0;
    }
    const double k = std::floor(std::log(rng.uniform_open()) / std::log(s));
    return static_cast<std::uint64_t>(k);
}

void check_pgf_argument(double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::domain_error("pgf argument outside [0,1]: " + std::to_string(s));
    }
}

double lf_ratio(double mean) { return mean / (1.0 + mean); }

}  // namespace

OffspringLaw OffspringLaw::pmf(std::vector<double> weights) {
    if (weights.empty()) {
        throw std::invalid_argument("pmf: empty weight vector");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("pmf: weights must be finite and nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("pmf: weights sum to " + std::to_string(total) +
                                    ", expected 1 within 1e-12");
    }
    while (weights.size() > 1 && weights.back() == 0.0) {
        weights.pop_back();
    }
    OffspringLaw law;
    law.kind_ = Kind::explicit_pmf;
    double mean = 0.0;
    for (std::size_t j = 1; j < weights.size(); ++j) {
        mean += static_cast<double>(j) * weights[j];
    }
    law.mean_ = mean;
    law.param_ = mean;
    law.alias_ = std::make_shared<const AliasTable>(
        AliasTable{boost::random::discrete_distribution<std::uint64_t, double>(weights.begin(),
                                                                              weights.end())});
    law.weights_ = std::move(weights);
    return law;
}

OffspringLaw OffspringLaw::degenerate(std::uint64_t k) {
    std::vector<double> w(k + 1, 0.0);
    w[k] = 1.0;
    return pmf(std::move(w));
}

OffspringLaw OffspringLaw::linear_fractional(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("linear-fractional law needs a finite positive mean");
    }
    OffspringLaw law;
    law.kind_ = Kind::linear_fractional;
    law.param_ = mean;
    law.mean_ = mean;
    return law;
}

OffspringLaw OffspringLaw::poisson(double mean) {
    if (!(mean > 0.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("Poisson law needs a finite positive mean");
    }
    OffspringLaw law;
    law.kind_ = Kind::poisson;
    law.param_ = mean;
    law.mean_ = mean;
    return law;
}

std::optional<std::uint64_t> OffspringLaw::max_support() const noexcept {
    if (kind_ == Kind::explicit_pmf) {
        return weights_.size() - 1;
    }
    return std::nullopt;
}

double OffspringLaw::probability(std::uint64_t k) const {
    switch (kind_) {
        case Kind::explicit_pmf:
            return k < weights_.size() ? weights_[k] : 0.0;
        case Kind::linear_fractional: {
            const double s = lf_ratio(param_);
            return (1.0 - s) * std::pow(s, static_cast<double>(k));
        }
        case Kind::poisson: {
            const double kd = static_cast<double>(k);
            return std::exp(kd * std::log(param_) - param_ - std::lgamma(kd + 1.0));
        }
    }
    return 0.0;
}

double OffspringLaw::pgf(double s) const {
    check_pgf_argument(s);
    switch (kind_) {
        case Kind::explicit_pmf:
            return compensated_horner(weights_, s);
        case Kind::linear_fractional: {
            const double r = lf_ratio(param_);
            return (1.0 - r) / (1.0 - r * s);
        }
        case Kind::poisson:
            return std::exp(param_ * (s - 1.0));
    }
    return 0.0;
}

double OffspringLaw::variance() const noexcept {
    switch (kind_) {
        case Kind::explicit_pmf: {
            double second = 0.0;
            for (std::size_t j = 1; j < weights_.size(); ++j) {
                const double d = static_cast<double>(j) - mean_;
                second += d * d * weights_[j];
            }
            return second + mean_ * mean_ * weights_[0];
        }
        case Kind::linear_fractional:
            return param_ * (1.0 + param_);
        case Kind::poisson:
            return param_;
    }
    return 0.0;
}

double OffspringLaw::sigma() const {
    if (!(mean_ > 0.0)) {
        throw std::domain_error("sigma undefined for a law with zero mean");
    }
    switch (kind_) {
        case Kind::explicit_pmf: {
            double factorial2 = 0.0;
            for (std::size_t j = 2; j < weights_.size(); ++j) {
                factorial2 += static_cast<double>(j) * static_cast<double>(j - 1) * weights_[j];
            }
            return factorial2 / (mean_ * mean_);
        }
        case Kind::linear_fractional:
            return 2.0;
        case Kind::poisson:
            return 1.0;
    }
    return 0.0;
}

double OffspringLaw::kappa(std::uint64_t a) const {
    if (!(mean_ > 0.0)) {
        throw std::domain_error("kappa undefined for a law with zero mean");
    }
    const double norm = mean_ * mean_;
    if (kind_ == Kind::explicit_pmf) {
        double sum = 0.0;
        for (std::size_t j = static_cast<std::size_t>(std::min<std::uint64_t>(a, weights_.size()));
             j < weights_.size(); ++j) {
            sum += static_cast<double>(j) * static_cast<double>(j) * weights_[j];
        }
        return sum / norm;
    }

    // Terms j^2 p_j are eventually monotone; stop once past the mode of
    // j^2 p_j and the term is below 1e-16 of the running sum.
    double mode = 0.0;
    double p = probability(a);
    double ratio_base = 0.0;
    if (kind_ == Kind::linear_fractional) {
        const double s = lf_ratio(param_);
        mode = 2.0 / -std::log(s);
        ratio_base = s;
    } else {
        mode = param_ + 2.0;
    }
    double sum = 0.0;
    double comp = 0.0;
    for (std::uint64_t j = a;; ++j) {
        const double jd = static_cast<double>(j);
        const double term = jd * jd * p;
        // Kahan summation keeps the 1e-14 target on long tails.
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (jd > mode && (term <= 1e-16 * sum || p == 0.0)) {
            break;
        }
        if (j - a > 100000000ULL) {
            throw std::runtime_error("kappa series failed to converge");
        }
        p *= (kind_ == Kind::linear_fractional) ? ratio_base : param_ / (jd + 1.0);
    }
    return sum / norm;
}

std::uint64_t OffspringLaw::sample(Philox& rng) const {
    switch (kind_) {
        case Kind::explicit_pmf:
            if (weights_.size() == 1 || (weights_.back() == 1.0)) {
                return weights_.size() - 1;
            }
            return alias_->dist(rng);
        case Kind::linear_fractional:
            return draw_geometric(lf_ratio(param_), rng);
        case Kind::poisson:
            return draw_poisson(param_, rng);
    }
    return 0;
}

Count OffspringLaw::sample_total(const Count& parents, Philox& rng,
                                 std::uint64_t parent_cap) const {
    if (parents.is_zero()) {
        return Count{};
    }
    const bool exact_range = parents.fits_u64() && parents.u64() <= kExactParentLimit;

    if (kind_ == Kind::explicit_pmf) {
        const std::uint64_t top = weights_.size() - 1;
        if (weights_[top] == 1.0) {
            // Point mass: the sum is deterministic at any size.
            if (parents.fits_u64() && (top == 0 || parents.u64() <= UINT64_MAX / top)) {
                return Count{parents.u64() * top};
            }
            return Count{parents.big() * top};
        }
        if (exact_range && parents.u64() <= parent_cap) {
            const std::uint64_t n = parents.u64();
            std::uint64_t total = 0;
            if (n <= kPerIndividualLimit) {
                for (std::uint64_t i = 0; i < n; ++i) {
                    total += alias_->dist(rng);
                }
                return Count{total};
            }
            // Multinomial cell counts by conditional binomial splitting.
            std::uint64_t remaining = n;
            double mass_left = 1.0;
            for (std::uint64_t j = 0; j <= top && remaining > 0; ++j) {
                const double w = weights_[j];
                if (w == 0.0) {
                    continue;
                }
                std::uint64_t cell = 0;
                if (j == top || w >= mass_left) {
                    cell = remaining;
                } else {
                    cell = draw_binomial(remaining, w / mass_left, rng);
                }
                total += j * cell;
                remaining -= cell;
                mass_left -= w;
            }
            return Count{total};
        }
        return sample_gaussian_total(parents, mean_, variance(), rng);
    }

    if (!exact_range) {
        return sample_gaussian_total(parents, mean_, variance(), rng);
    }
    const auto n = parents.u64();
    if (kind_ == Kind::poisson) {
        return Count{draw_poisson(static_cast<double>(n) * param_, rng)};
    }
    // Negative binomial as a Gamma-Poisson mixture.
    boost::random::gamma_distribution<double> gamma(static_cast<double>(n), param_);
    return Count{draw_poisson(gamma(rng), rng)};
}

bool OffspringLaw::operator==(const OffspringLaw& other) const noexcept {
    return kind_ == other.kind_ && param_ == other.param_ && weights_ == other.weights_;
}

Count sample_gaussian_total(const Count& n, double mean, double variance, Philox& rng) {
    const double z = standard_normal(rng);
    if (n.fits_u64() && n.u64() <= (std::uint64_t{1} << 52)) {
        const double nd = static_cast<double>(n.u64());
        const double x = std::nearbyint(nd * mean + std::sqrt(nd * variance) * z);
        if (x <= 0.0) {
            return Count{};
        }
        if (x < 0x1.0p63) {
            return Count{static_cast<std::uint64_t>(x)};
        }
        return Count{BigInt(x)};
    }
    BigFloat center = BigFloat(n.big()) * BigFloat(mean);
    center += BigFloat(std::sqrt(n.to_double() * variance) * z);
    if (center <= 0) {
        return Count{};
    }
    return Count{BigInt(boost::multiprecision::round(center))};
}

}  // namespace bpsre
