#include "bpsre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/random/discrete_distribution.hpp>

namespace bpsre {

struct GapLaw::Alias {
    boost::random::discrete_distribution<std::uint64_t, double> dist;
};

struct NuGenerator::Alias {
    boost::random::discrete_distribution<std::size_t, double> dist;
};

namespace {

constexpr std::uint64_t kZetaDirectTerms = 32;

double zeta_value(double s) { return 1.0 + zeta_tail(s, 1); }

// Sum_{k >= 1} k^p q (1-q)^(k-1), summed until the terms are negligible.
double geometric_moment(double q, double p) {
    if (q >= 1.0) {
        return 1.0;
    }
    double sum = 0.0;
    double comp = 0.0;
    double weight = q;
    const double mode = p / -std::log1p(-q);
    for (std::uint64_t k = 1;; ++k) {
        const double term = std::pow(static_cast<double>(k), p) * weight;
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (static_cast<double>(k) > mode && term < 1e-17 * sum) {
            break;
        }
        weight *= 1.0 - q;
    }
    return sum;
}

double log_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }

}  // namespace

double zeta_tail(double s, std::uint64_t n) {
    // Direct terms n+1 .. N-1, then Euler-Maclaurin from N.
    const std::uint64_t start = n + 1;
    const std::uint64_t big_n = std::max<std::uint64_t>(start, kZetaDirectTerms);
    double sum = 0.0;
    for (std::uint64_t k = big_n - 1; k >= start && k > 0; --k) {
        sum += std::pow(static_cast<double>(k), -s);
    }
    const double x = static_cast<double>(big_n);
    const double fx = std::pow(x, -s);
    double em = x * fx / (s - 1.0) + 0.5 * fx;
    em += s * fx / x / 12.0;
    em -= s * (s + 1.0) * (s + 2.0) * fx / (x * x * x) / 720.0;
    em += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * fx / std::pow(x, 5.0) / 30240.0;
    return sum + em;
}

GapLaw GapLaw::pmf(std::vector<double> weights) {
    if (weights.size() < 2) {
        throw std::invalid_argument("gap pmf needs mass on some d >= 1");
    }
    if (weights[0] != 0.0) {
        throw std::invalid_argument("gap pmf puts mass at 0; gaps must be >= 1");
    }
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (!std::isfinite(weights[k]) || weights[k] < 0.0) {
            throw std::invalid_argument("gap pmf weights must be finite and nonnegative");
        }
        total += weights[k];
        mean += static_cast<double>(k) * weights[k];
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("gap pmf weights must sum to 1");
    }
    while (weights.back() == 0.0) {
        weights.pop_back();
    }
    GapLaw law;
    law.kind_ = Kind::pmf;
    law.mean_ = mean;
    law.param_ = mean;
    law.alias_ = std::make_shared<const Alias>(
        Alias{boost::random::discrete_distribution<std::uint64_t, double>(weights.begin(),
                                                                         weights.end())});
    law.weights_ = std::move(weights);
    return law;
}

GapLaw GapLaw::constant(std::uint64_t d) {
    if (d == 0) {
        throw std::invalid_argument("constant gap must be >= 1");
    }
    std::vector<double> w(d + 1, 0.0);
    w[d] = 1.0;
    return pmf(std::move(w));
}

GapLaw GapLaw::geometric(double mean) {
    if (!(mean >= 1.0) || !std::isfinite(mean)) {
        throw std::invalid_argument("geometric gap mean must be finite and >= 1");
    }
    GapLaw law;
    law.kind_ = Kind::geometric;
    law.param_ = mean;
    law.mean_ = mean;
    return law;
}

GapLaw GapLaw::zeta(double exponent) {
    if (!(exponent > 2.0) || !std::isfinite(exponent)) {
        throw std::invalid_argument("zeta gap exponent must exceed 2 for a finite mean");
    }
    GapLaw law;
    law.kind_ = Kind::zeta;
    law.param_ = exponent;
    law.zeta_norm_ = zeta_value(exponent);
    law.mean_ = zeta_value(exponent - 1.0) / law.zeta_norm_;
    return law;
}

double GapLaw::probability(std::uint64_t d) const {
    if (d == 0) {
        return 0.0;
    }
    switch (kind_) {
        case Kind::pmf:
            return d < weights_.size() ? weights_[d] : 0.0;
        case Kind::geometric: {
            const double q = 1.0 / param_;
            return q * std::pow(1.0 - q, static_cast<double>(d - 1));
        }
        case Kind::zeta:
            return std::pow(static_cast<double>(d), -param_) / zeta_norm_;
    }
    return 0.0;
}

double GapLaw::tail(std::uint64_t n) const {
    switch (kind_) {
        case Kind::pmf: {
            double t = 0.0;
            for (std::size_t k = n + 1; k < weights_.size(); ++k) {
                t += weights_[k];
            }
            return t;
        }
        case Kind::geometric:
            return std::pow(1.0 - 1.0 / param_, static_cast<double>(n));
        case Kind::zeta:
            return n == 0 ? 1.0 : zeta_tail(param_, n) / zeta_norm_;
    }
    return 0.0;
}

double GapLaw::moment(double p) const {
    switch (kind_) {
        case Kind::pmf: {
            double sum = 0.0;
            for (std::size_t k = 1; k < weights_.size(); ++k) {
                sum += std::pow(static_cast<double>(k), p) * weights_[k];
            }
            return sum;
        }
        case Kind::geometric:
            return geometric_moment(1.0 / param_, p);
        case Kind::zeta:
            if (param_ - p <= 1.0) {
                return std::numeric_limits<double>::infinity();
            }
            return zeta_value(param_ - p) / zeta_norm_;
    }
    return 0.0;
}

std::uint64_t GapLaw::truncation_point(double tail_mass, std::uint64_t max_point) const {
    switch (kind_) {
        case Kind::pmf:
            return std::min<std::uint64_t>(weights_.size() - 1, max_point);
        case Kind::geometric: {
            if (param_ == 1.0) {
                return 1;
            }
            const double d = std::ceil(std::log(tail_mass) / std::log1p(-1.0 / param_));
            return std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(d, 1.0)), 1,
                                              max_point);
        }
        case Kind::zeta: {
            // Tail ~ D^(1-s) / ((s-1) zeta(s)); bisect on the exact tail.
            std::uint64_t lo = 1;
            std::uint64_t hi = max_point;
            if (tail(hi) > tail_mass) {
                return hi;
            }
            while (lo < hi) {
                const std::uint64_t mid = lo + (hi - lo) / 2;
                if (tail(mid) <= tail_mass) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            return lo;
        }
    }
    return max_point;
}

std::uint64_t GapLaw::sample(Philox& rng) const {
    switch (kind_) {
        case Kind::pmf:
            if (weights_.back() == 1.0) {
                return weights_.size() - 1;
            }
            return alias_->dist(rng);
        case Kind::geometric: {
            if (param_ == 1.0) {
                return 1;
            }
            const double u = rng.uniform_open();
            return 1 + static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-1.0 / param_)));
        }
        case Kind::zeta: {
            // Devroye's rejection sampler for the zeta law.
            const double s = param_;
            const double b = std::pow(2.0, s - 1.0);
            while (true) {
                const double u = rng.uniform_open();
                const double v = rng.uniform();
                const double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
                if (!(x < 9.0e18)) {
                    continue;
                }
                const double t = std::pow(1.0 + 1.0 / x, s - 1.0);
                if (v * x * (t - 1.0) / (b - 1.0) <= t / b) {
                    return static_cast<std::uint64_t>(x);
                }
            }
        }
    }
    return 1;
}

NuGenerator NuGenerator::fixed(OffspringLaw law) {
    NuGenerator g;
    g.kind_ = Kind::fixed;
    g.atoms_.push_back(std::move(law));
    g.probs_ = {1.0};
    g.finish();
    return g;
}

NuGenerator NuGenerator::lf_two_point(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw std::invalid_argument("two-point log-mean law needs c > 0");
    }
    NuGenerator g;
    g.kind_ = Kind::lf_two_point;
    g.param_ = c;
    g.atoms_ = {OffspringLaw::linear_fractional(std::exp(-c)),
                OffspringLaw::linear_fractional(std::exp(c))};
    g.probs_ = {0.5, 0.5};
    g.finish();
    g.mean_log_a_ = 0.0;
    g.var_log_a_ = c * c;
    return g;
}

NuGenerator NuGenerator::lf_discrete_gaussian(double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw std::invalid_argument("discrete Gaussian log-mean law needs sd > 0");
    }
    // Grid j*h, |j| <= 32, h = sd/4, i.e. +-8 sd.
    constexpr int kHalf = 32;
    const double h = sd / 4.0;
    std::vector<double> half_weights(kHalf + 1);
    double total = 0.0;
    for (int j = 0; j <= kHalf; ++j) {
        const double x = j * h;
        half_weights[j] = std::exp(-0.5 * (x / sd) * (x / sd));
        total += (j == 0 ? 1.0 : 2.0) * half_weights[j];
    }
    double var = 0.0;
    for (int j = 1; j <= kHalf; ++j) {
        half_weights[j] /= total;
        var += 2.0 * half_weights[j] * (j * h) * (j * h);
    }
    half_weights[0] /= total;
    const double scale = sd / std::sqrt(var);

    NuGenerator g;
    g.kind_ = Kind::lf_discrete_gaussian;
    g.param_ = sd;
    for (int j = -kHalf; j <= kHalf; ++j) {
        g.atoms_.push_back(OffspringLaw::linear_fractional(std::exp(j * h * scale)));
        g.probs_.push_back(half_weights[static_cast<std::size_t>(std::abs(j))]);
    }
    g.finish();
    g.mean_log_a_ = 0.0;
    g.var_log_a_ = sd * sd;
    return g;
}

NuGenerator NuGenerator::choice(std::vector<OffspringLaw> laws, std::vector<double> probabilities) {
    if (laws.empty() || laws.size() != probabilities.size()) {
        throw std::invalid_argument("choice generator needs one probability per law");
    }
    double total = 0.0;
    for (double p : probabilities) {
        if (!std::isfinite(p) || p < 0.0) {
            throw std::invalid_argument("choice probabilities must be nonnegative");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("choice probabilities must sum to 1");
    }
    for (const auto& law : laws) {
        if (!(law.mean() > 0.0)) {
            throw std::invalid_argument("choice laws need a positive mean");
        }
    }
    NuGenerator g;
    g.kind_ = Kind::choice;
    g.atoms_ = std::move(laws);
    g.probs_ = std::move(probabilities);
    g.finish();
    return g;
}

void NuGenerator::finish() {
    double mean = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (!(atoms_[i].mean() > 0.0)) {
            throw std::invalid_argument("nu laws need a positive mean");
        }
        mean += probs_[i] * std::log(atoms_[i].mean());
    }
    double var = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
        const double d = std::log(atoms_[i].mean()) - mean;
        var += probs_[i] * d * d;
    }
    mean_log_a_ = mean;
    var_log_a_ = var;
    alias_ = std::make_shared<const Alias>(
        Alias{boost::random::discrete_distribution<std::size_t, double>(probs_.begin(),
                                                                       probs_.end())});
}

std::size_t NuGenerator::sample_index(Philox& rng) const {
    if (atoms_.size() == 1) {
        return 0;
    }
    return alias_->dist(rng);
}

EnvironmentModel::EnvironmentModel(GapLaw gaps, NuGenerator nu, OffspringLaw mu)
    : gaps_(std::move(gaps)), nu_(std::move(nu)), mu_(std::move(mu)) {
    if (std::abs(mu_.mean() - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "mu must have mean 1 (critical plain generations), got " << mu_.mean();
        throw std::invalid_argument(msg.str());
    }
}

SparseEnvironment::SparseEnvironment(ModelPtr model, Philox gap_stream, Philox law_stream)
    : model_(std::move(model)), gap_stream_(gap_stream), law_stream_(law_stream) {}

SparseEnvironment::SparseEnvironment(ModelPtr model, std::vector<std::uint64_t> gaps,
                                     std::vector<std::size_t> law_indices)
    : model_(std::move(model)), gaps_(std::move(gaps)), law_indices_(std::move(law_indices)) {
    if (gaps_.size() != law_indices_.size()) {
        throw std::invalid_argument("fixed environment needs one law index per gap");
    }
    for (std::size_t k = 0; k < gaps_.size(); ++k) {
        if (gaps_[k] == 0) {
            throw std::invalid_argument("gaps must be >= 1");
        }
        if (law_indices_[k] >= model_->nu().atoms().size()) {
            throw std::invalid_argument("law index out of range");
        }
        marks_.push_back(marks_.back() + gaps_[k]);
    }
}

void SparseEnvironment::append_one() {
    if (!gap_stream_ || !law_stream_) {
        throw std::out_of_range("fixed environment cannot be extended");
    }
    const auto d = model_->gaps().sample(*gap_stream_);
    const auto idx = model_->nu().sample_index(*law_stream_);
    gaps_.push_back(d);
    law_indices_.push_back(idx);
    marks_.push_back(marks_.back() + d);
}

void SparseEnvironment::extend_to_cover(std::uint64_t horizon) {
    while (marks_.back() <= horizon) {
        append_one();
    }
}

void SparseEnvironment::extend_to_size(std::size_t k) {
    while (gaps_.size() < k) {
        append_one();
    }
}

std::uint64_t SparseEnvironment::gap(std::size_t k) {
    extend_to_size(k);
    return gaps_.at(k - 1);
}

std::uint64_t SparseEnvironment::mark(std::size_t k) {
    extend_to_size(k);
    return marks_.at(k);
}

const OffspringLaw& SparseEnvironment::law(std::size_t k) {
    extend_to_size(k);
    return model_->nu().atoms()[law_indices_.at(k - 1)];
}

std::size_t SparseEnvironment::first_passage(std::uint64_t n) {
    extend_to_cover(n);
    const auto it = std::upper_bound(marks_.begin(), marks_.end(), n);
    return static_cast<std::size_t>(it - marks_.begin());
}

SparseEnvironment draw_environment(const ModelPtr& model, std::uint64_t horizon,
                                   const StreamFactory& streams, std::uint64_t replicate) {
    SparseEnvironment env(model, streams.stream(replicate, StreamRole::gaps),
                          streams.stream(replicate, StreamRole::laws));
    env.extend_to_cover(horizon);
    return env;
}

namespace {

MonteCarloValue mean_and_se(double sum, double sum_sq, std::uint64_t n) {
    const double nd = static_cast<double>(n);
    const double mean = sum / nd;
    const double var = n > 1 ? std::max(0.0, (sum_sq - nd * mean * mean) / (nd - 1.0)) : 0.0;
    return {mean, std::sqrt(var / nd)};
}

std::string format_number(double x) {
    std::ostringstream out;
    out.precision(6);
    out << x;
    return out.str();
}

}  // namespace

AssumptionReport check_assumptions(const EnvironmentModel& model, std::uint64_t sample_size,
                                   Philox& rng, std::uint64_t kappa_level) {
    if (sample_size < 2) {
        throw std::invalid_argument("check_assumptions needs at least 2 samples");
    }
    AssumptionReport r;
    const auto& nu = model.nu();
    r.mean_log_a = nu.mean_log_a();
    r.a1_exact = nu.symmetric_log_mean();
    r.var_log_a_declared = nu.var_log_a();
    r.mean_mu = model.mu().mean();
    r.mean_gap = model.m();
    r.gap_moment_3_2 = model.gaps().moment(1.5);
    r.kappa_level = kappa_level;

    double exact_k4 = 0.0;
    for (std::size_t i = 0; i < nu.atoms().size(); ++i) {
        exact_k4 += nu.probabilities()[i] * std::pow(log_plus(nu.atoms()[i].kappa(kappa_level)), 4);
    }
    r.log_kappa4 = exact_k4;

    double s_log = 0.0, s_log2 = 0.0, s_dev2 = 0.0, s_dev4 = 0.0;
    double s_d = 0.0, s_d2 = 0.0, s_k = 0.0, s_k2 = 0.0;
    for (std::uint64_t i = 0; i < sample_size; ++i) {
        const auto& law = nu.atoms()[nu.sample_index(rng)];
        const double la = std::log(law.mean());
        s_log += la;
        s_log2 += la * la;
        const double dev2 = (la - r.mean_log_a) * (la - r.mean_log_a);
        s_dev2 += dev2;
        s_dev4 += dev2 * dev2;
        const double d15 = std::pow(static_cast<double>(model.gaps().sample(rng)), 1.5);
        s_d += d15;
        s_d2 += d15 * d15;
        const double k4 = std::pow(log_plus(law.kappa(kappa_level)), 4);
        s_k += k4;
        s_k2 += k4 * k4;
    }
    r.mean_log_a_mc = mean_and_se(s_log, s_log2, sample_size);
    r.var_log_a_mc = mean_and_se(s_dev2, s_dev4, sample_size);
    r.gap_moment_3_2_mc = mean_and_se(s_d, s_d2, sample_size);
    r.log_kappa4_mc = mean_and_se(s_k, s_k2, sample_size);

    if (r.a1_exact) {
        r.flags.emplace_back("A1: exact");
    } else if (std::abs(r.mean_log_a) <= 1e-12) {
        r.flags.emplace_back("A1: satisfied");
    } else {
        r.flags.push_back("A1 violated: E log A = " + format_number(r.mean_log_a));
    }
    if (!(r.var_log_a_declared > 0.0)) {
        r.flags.emplace_back("A1 violated: Var log A = 0");
    }
    r.flags.emplace_back("A2: satisfied");
    if (model.gaps().kind() == GapLaw::Kind::zeta && model.gaps().parameter() <= 2.5) {
        r.a3_violated = true;
        r.flags.emplace_back("A3 violated: exponent <= 5/2");
    } else {
        r.flags.emplace_back("A3: satisfied");
    }
    if (std::isfinite(r.log_kappa4)) {
        r.flags.push_back("A4: satisfied with a = " + std::to_string(kappa_level));
    } else {
        r.flags.emplace_back("A4 violated");
    }
    return r;
}

std::vector<BuiltinModel> builtin_models() {
    const auto lf1 = OffspringLaw::linear_fractional(1.0);
    const auto halves = OffspringLaw::pmf({0.5, 0.0, 0.5});
    auto make = [](GapLaw g, NuGenerator n, OffspringLaw m) {
        return std::make_shared<const EnvironmentModel>(std::move(g), std::move(n), std::move(m));
    };
    return {
        {"two_point_geometric3", make(GapLaw::geometric(3.0), NuGenerator::lf_two_point(1.5), lf1)},
        {"two_point_constant1", make(GapLaw::constant(1), NuGenerator::lf_two_point(1.5), lf1)},
        {"two_point_constant2", make(GapLaw::constant(2), NuGenerator::lf_two_point(1.5), lf1)},
        {"gaussian_poisson_pmf_gaps",
         make(GapLaw::pmf({0.0, 0.5, 0.0, 0.5}), NuGenerator::lf_discrete_gaussian(0.8),
              OffspringLaw::poisson(1.0))},
        {"two_point_binary_mu", make(GapLaw::geometric(2.0), NuGenerator::lf_two_point(0.8), halves)},
    };
}

ModelPtr builtin_model(const std::string& name) {
    for (auto& b : builtin_models()) {
        if (b.name == name) {
            return b.model;
        }
    }
    throw std::out_of_range("unknown built-in model '" + name + "'");
}

}  // namespace bpsre
