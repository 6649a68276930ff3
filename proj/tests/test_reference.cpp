#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bpsre/reference.hpp"
#include "bpsre/stats.hpp"

using namespace bpsre;

namespace {

Philox stream(std::uint64_t seed, std::uint64_t rep = 0) {
    return StreamFactory(seed, "meander").stream(rep, StreamRole::auxiliary);
}

std::vector<double> at_time(std::uint64_t steps, double t, std::size_t n, std::uint64_t seed) {
    auto rng = stream(seed);
    const std::vector<double> times{t};
    std::vector<double> out(n);
    for (auto& x : out) {
        x = sample_meander_at(steps, times, rng)[0];
    }
    return out;
}

// CDF of B+(t) for t < 1 by quadrature of the density
// x t^{-3/2} exp(-x^2/2t) (2 Phi(x / sqrt(1-t)) - 1).
struct MeanderMarginal {
    double t;
    double h;
    std::vector<double> cdf;

    explicit MeanderMarginal(double time) : t(time), h(1e-3 * std::sqrt(time)) {
        auto density = [this](double x) {
            return x / std::pow(t, 1.5) * std::exp(-x * x / (2.0 * t)) *
                   std::erf(x / std::sqrt(2.0 * (1.0 - t)));
        };
        cdf.push_back(0.0);
        for (int i = 0; i < 12000; ++i) {
            const double a = i * h;
            const double piece =
                h / 6.0 * (density(a) + 4.0 * density(a + 0.5 * h) + density(a + h));
            cdf.push_back(cdf.back() + piece);
        }
    }

    double operator()(double x) const {
        if (!(x > 0.0)) {
            return 0.0;
        }
        const double pos = x / h;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= cdf.size()) {
            return 1.0;
        }
        const double w = pos - static_cast<double>(i);
        return cdf[i] + w * (cdf[i + 1] - cdf[i]);
    }
};

}  // namespace

TEST_CASE("marginal oracle is a distribution") {
    for (double t : {0.25, 0.5, 0.75}) {
        CHECK(MeanderMarginal(t).cdf.back() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("meander marginals before time one match the density oracle") {
    for (double t : {0.25, 0.5, 0.75}) {
        const auto x = at_time(200, t, 100'000, 10);
        const auto ks = ks_one_sample(x, MeanderMarginal(t));
        CHECK(ks.d < ks.critical[2]);
    }
}

TEST_CASE("rayleigh cdf") {
    CHECK(rayleigh_cdf(-1.0) == 0.0);
    CHECK(rayleigh_cdf(0.0) == 0.0);
    CHECK(rayleigh_cdf(std::sqrt(2.0 * std::log(2.0))) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rayleigh_cdf(40.0) == 1.0);
    double prev = 0.0;
    for (double x = 0.0; x < 6.0; x += 0.01) {
        REQUIRE(rayleigh_cdf(x) >= prev);
        prev = rayleigh_cdf(x);
    }
}

TEST_CASE("meander paths start at zero and stay nonnegative") {
    auto rng = stream(1);
    for (int i = 0; i < 200; ++i) {
        const auto p = sample_meander(500, rng);
        REQUIRE(p.values.size() == 501);
        CHECK(p.values[0] == 0.0);
        CHECK(p.last_zero >= 0.0);
        CHECK(p.last_zero < 1.0);
        for (double v : p.values) {
            REQUIRE(v >= 0.0);
        }
        CHECK(p.at(0.0) == 0.0);
        CHECK(p.at(1.0) == p.values.back());
    }
}

TEST_CASE("meander argument checks") {
    auto rng = stream(2);
    CHECK_THROWS_AS(sample_meander(1, rng), std::invalid_argument);
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS(sample_meander_at(100, bad, rng), std::domain_error);
}

TEST_CASE("meander streams are reproducible") {
    auto a = stream(3, 7);
    auto b = stream(3, 7);
    CHECK(sample_meander(300, a).values == sample_meander(300, b).values);
}

TEST_CASE("meander at time one is Rayleigh") {
    const auto x = at_time(1000, 1.0, 100'000, 4);
    CHECK(ks_one_sample(x, rayleigh_cdf).d <= 0.01);

    double s1 = 0.0;
    double s2 = 0.0;
    for (double v : x) {
        s1 += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(x.size());
    const double mean = s1 / n;
    // Rayleigh: mean sqrt(pi/2), second moment 2, variance 2 - pi/2.
    CHECK(std::abs(mean - std::sqrt(std::numbers::pi / 2.0)) < 4.0 * std::sqrt((2.0 - std::numbers::pi / 2.0) / n));
    CHECK(s2 / n == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("meander marginals are stable under step doubling") {
    for (double t : {0.25, 0.5, 1.0}) {
        const auto coarse = at_time(500, t, 50'000, 5);
        const auto fine = at_time(1000, t, 50'000, 6);
        CHECK(ks_two_sample(coarse, fine) < ks_two_sample_critical(50'000, 50'000, 2));
    }
}

TEST_CASE("pointwise and path samplers agree") {
    auto rng = stream(7);
    std::vector<double> path(30'000);
    for (auto& v : path) {
        v = sample_meander(400, rng).at(0.5);
    }
    const auto point = at_time(400, 0.5, 30'000, 8);
    CHECK(ks_two_sample(path, point) < ks_two_sample_critical(30'000, 30'000, 2));
}

TEST_CASE("inverse gaussian moments") {
    auto rng = stream(9);
    for (auto [mean, shape] : {std::pair{1.0, 1.0}, std::pair{0.3, 2.0}, std::pair{2.0, 0.5}}) {
        const int n = 400'000;
        double s1 = 0.0;
        double s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = sample_inverse_gaussian(mean, shape, rng);
            REQUIRE(x > 0.0);
            s1 += x;
            s2 += x * x;
        }
        const double m = s1 / n;
        const double var = s2 / n - m * m;
        const double true_var = mean * mean * mean / shape;
        CHECK(std::abs(m - mean) < 4.0 * std::sqrt(true_var / n));
        CHECK(var == doctest::Approx(true_var).epsilon(0.05));
    }
}
