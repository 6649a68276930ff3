#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "bpsre/oracle.hpp"
#include "bpsre/stats.hpp"

using namespace bpsre;

namespace {

ModelPtr make(GapLaw gaps, NuGenerator nu, OffspringLaw mu) {
    return std::make_shared<const EnvironmentModel>(std::move(gaps), std::move(nu), std::move(mu));
}

const OffspringLaw kHalves = OffspringLaw::pmf({0.5, 0.0, 0.5});

double uniform_cdf(double x) { return x <= 0.0 ? 0.0 : (x >= 1.0 ? 1.0 : x); }

}  // namespace

TEST_CASE("wilson interval") {
    const auto w = wilson_interval(5, 10);
    CHECK(w.lo == doctest::Approx(0.2366).epsilon(1e-3));
    CHECK(w.hi == doctest::Approx(0.7634).epsilon(1e-3));
    CHECK(wilson_interval(0, 50).lo == 0.0);
    CHECK(wilson_interval(50, 50).hi == doctest::Approx(1.0));
    for (std::uint64_t n : {1, 7, 100, 12345}) {
        for (std::uint64_t s = 0; s <= n; s += std::max<std::uint64_t>(1, n / 13)) {
            const auto a = wilson_interval(s, n, 3.0);
            const auto b = wilson_interval(n - s, n, 3.0);
            CHECK(a.contains(double(s) / double(n)));
            CHECK(a.lo >= 0.0);
            CHECK(a.hi <= 1.0);
            CHECK(a.lo == doctest::Approx(1.0 - b.hi).epsilon(1e-12));
        }
    }
    const auto narrow = wilson_interval(5000, 10000);
    CHECK(narrow.hi - narrow.lo < w.hi - w.lo);
}

TEST_CASE("survival table csv") {
    const std::vector<std::uint64_t> grid{4, 16};
    const std::vector<std::uint64_t> surv{50, 25};
    const auto t = make_survival_table(grid, 100, surv);
    CHECK(t.rows[1].sqrt_n_p_hat == doctest::Approx(1.0));
    std::ostringstream out;
    t.write_csv(out);
    CHECK(out.str().rfind("n,reps,survivors,p_hat,ci_lo,ci_hi,sqrt_n_p_hat\n4,100,50,0.5,", 0) == 0);
}

TEST_CASE("immortal model survives surely") {
    const auto model = make(GapLaw::geometric(3.0), NuGenerator::fixed(OffspringLaw::degenerate(1)),
                            OffspringLaw::degenerate(1));
    const std::vector<std::uint64_t> grid{10, 100, 1000};
    const auto t = estimate_survival_curve(model, grid, 2000, StreamFactory(1, "imm"));
    for (const auto& row : t.rows) {
        CHECK(row.p_hat == 1.0);
    }
}

TEST_CASE("survival curve against the quenched oracle") {
    const auto nu = OffspringLaw::pmf({0.2, 0.3, 0.1, 0.4});
    const auto model = make(GapLaw::constant(2), NuGenerator::fixed(nu), kHalves);
    std::vector<OffspringLaw> laws;
    for (int i = 0; i < 8; ++i) {
        laws.push_back(nu);
        laws.push_back(kHalves);
    }
    const QuenchedSpec spec(laws);
    const std::vector<std::uint64_t> grid{1, 2, 5, 9, 16};
    const std::uint64_t reps = 100'000;
    const auto t = estimate_survival_curve(model, grid, reps, StreamFactory(2, "oracle"));
    for (const auto& row : t.rows) {
        CHECK(wilson_interval(row.survivors, reps, 3.0).contains(exact_survival_quenched(spec, row.n)));
    }
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        CHECK(t.rows[i].survivors <= t.rows[i - 1].survivors);
    }
}

TEST_CASE("embedded survival against the annealed oracle") {
    // nu in {A, B} w.p. 1/2, gaps in {1, 3} w.p. 1/2: enumerate all 4^k
    // environments of the embedded chain exactly.
    const auto a = OffspringLaw::pmf({0.25, 0.25, 0.25, 0.25});
    const auto b = OffspringLaw::pmf({0.4, 0.0, 0.6});
    const auto model = make(GapLaw::pmf({0.0, 0.5, 0.0, 0.5}), NuGenerator::choice({a, b}, {0.5, 0.5}), kHalves);
    const std::uint64_t reps = 100'000;
    const std::vector<std::uint64_t> grid{1, 3, 6};
    const auto t = estimate_embedded_survival_curve(model, grid, reps, StreamFactory(3, "embed"));
    for (const auto& row : t.rows) {
        const std::uint64_t k = row.n;
        double exact = 0.0;
        for (std::uint64_t code = 0; code < (std::uint64_t{1} << (2 * k)); ++code) {
            std::vector<OffspringLaw> laws;
            for (std::uint64_t j = 0; j < k; ++j) {
                const auto bits = (code >> (2 * j)) & 3U;
                laws.push_back((bits & 1U) ? b : a);
                for (int i = 0; i < ((bits & 2U) ? 2 : 0); ++i) {
                    laws.push_back(kHalves);
                }
            }
            const QuenchedSpec spec(laws);
            exact += exact_survival_quenched(spec, laws.size()) / double(std::uint64_t{1} << (2 * k));
        }
        CHECK(wilson_interval(row.survivors, reps, 3.0).contains(exact));
    }
}

TEST_CASE("ratio check on synthetic tables") {
    const std::vector<std::uint64_t> grid{100, 400};
    const std::vector<std::uint64_t> sparse_s{200'000, 100'000};
    const std::vector<std::uint64_t> embed_s{100'000, 50'000};
    const auto sparse = make_survival_table(grid, 1'000'000, sparse_s);
    const auto embed = make_survival_table(grid, 1'000'000, embed_s);
    const auto r = constant_ratio_check(sparse, embed, 4.0);
    CHECK(r.ratio == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.target == doctest::Approx(2.0));
    CHECK(r.ci.contains(2.0));
    CHECK(r.within_tolerance);
    CHECK(r.sparse_plateau);
    CHECK(r.embed_plateau);
    CHECK(r.pass);
    CHECK_FALSE(constant_ratio_check(sparse, embed, 9.0).within_tolerance);

    const std::vector<std::uint64_t> drifting{300'000, 100'000};
    CHECK_FALSE(plateau_reached(make_survival_table(grid, 1'000'000, drifting)));
}

TEST_CASE("unit gaps give ratio one") {
    const auto model = make(GapLaw::constant(1), NuGenerator::lf_two_point(1.5), OffspringLaw::linear_fractional(1.0));
    const std::vector<std::uint64_t> grid{64, 128};
    const auto sparse = estimate_survival_curve(model, grid, 100'000, StreamFactory(4, "s"));
    const auto embed = estimate_embedded_survival_curve(model, grid, 100'000, StreamFactory(4, "e"));
    CHECK(constant_ratio_check(sparse, embed, 1.0).ci_contains_target);
}

TEST_CASE("worker count does not change results") {
    const auto model = builtin_model("two_point_geometric3");
    const std::vector<std::uint64_t> grid{32, 256};
    const StreamFactory f(5, "workers");
    RunOptions one;
    one.chunk = 100;
    RunOptions many = one;
    many.workers = 4;
    const auto a = estimate_survival_curve(model, grid, 5000, f, one);
    const auto b = estimate_survival_curve(model, grid, 5000, f, many);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.rows[i].survivors == b.rows[i].survivors);
    }

    const std::vector<double> times{0.5, 1.0};
    YaglomOptions y1;
    y1.batch = 3000;
    y1.run.chunk = 500;
    YaglomOptions y3 = y1;
    y3.run.workers = 3;
    const auto ya = yaglom_sample(model, 1024, times, 1000, f, y1);
    const auto yb = yaglom_sample(model, 1024, times, 1000, f, y3);
    CHECK(ya.values == yb.values);
    CHECK(ya.replicates == yb.replicates);
}

TEST_CASE("yaglom sample on a deterministic doubling process") {
    const auto model = make(GapLaw::constant(1), NuGenerator::fixed(OffspringLaw::degenerate(2)),
                            OffspringLaw::degenerate(1));
    const std::vector<double> times{0.5, 1.0};
    YaglomOptions opts;
    opts.scale = 64.0 * std::log(2.0);
    const auto y = yaglom_sample(model, 64, times, 1000, StreamFactory(6, "y"), opts);
    CHECK(y.survivors == 1000);
    CHECK(y.zero_flags == 0);
    for (const auto& row : y.values) {
        CHECK(row[0] == doctest::Approx(0.5));
        CHECK(row[1] == doctest::Approx(1.0));
    }
    CHECK(y.column(1).size() == 1000);
}

TEST_CASE("yaglom argument checks") {
    const auto model = builtin_model("two_point_geometric3");
    const std::vector<double> times{1.0};
    const StreamFactory f(7, "y");
    CHECK_THROWS_AS(yaglom_sample(model, 4096, times, 999, f), std::invalid_argument);
    CHECK_THROWS_AS(yaglom_sample(model, 16, times, 1000, f), std::invalid_argument);

    const auto dead = make(GapLaw::constant(1), NuGenerator::fixed(OffspringLaw::pmf({0.999, 0.001})),
                           OffspringLaw::degenerate(1));
    YaglomOptions opts;
    opts.scale = 1.0;
    opts.batch = 1000;
    opts.max_replicates = 5000;
    try {
        yaglom_sample(dead, 10, times, 1000, f, opts);
        FAIL("expected BudgetExceeded");
    } catch (const BudgetExceeded& e) {
        CHECK(e.partial().survivors < 1000);
        CHECK(e.partial().replicates >= 5000);
    }
}

TEST_CASE("kolmogorov-smirnov distances") {
    const std::vector<double> median{0.5};
    CHECK(ks_one_sample(median, uniform_cdf).d == doctest::Approx(0.5));

    const std::size_t n = 40;
    std::vector<double> quantiles(n);
    for (std::size_t i = 0; i < n; ++i) {
        quantiles[i] = (i + 0.5) / n;
    }
    const auto q = ks_one_sample(quantiles, uniform_cdf);
    CHECK(q.d == doctest::Approx(0.5 / n));
    CHECK(q.critical[2] == doctest::Approx(1.62762 / std::sqrt(double(n))));

    const std::vector<double> zero{0.0};
    const std::vector<double> one{1.0};
    CHECK(ks_two_sample(quantiles, quantiles) == 0.0);
    CHECK(ks_two_sample(zero, one) == 1.0);
    CHECK(ks_two_sample_critical(100, 100, 1) == doctest::Approx(1.35810 * std::sqrt(0.02)));

    const std::vector<double> empty;
    CHECK_THROWS_AS(ks_one_sample(empty, uniform_cdf), std::invalid_argument);
    CHECK_THROWS_AS(ks_two_sample(empty, one), std::invalid_argument);
}

TEST_CASE("kolmogorov-smirnov calibration under the null") {
    auto rng = StreamFactory(8, "ks").stream(0, StreamRole::auxiliary);
    int accepted = 0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x(1000);
        for (auto& v : x) {
            v = rng.uniform();
        }
        const auto r = ks_one_sample(x, uniform_cdf);
        accepted += r.d < r.critical[2];
    }
    CHECK(accepted >= 98);
}
