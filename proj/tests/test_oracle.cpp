#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bpsre/oracle.hpp"

using namespace bpsre;

namespace {

const OffspringLaw kHalves = OffspringLaw::pmf({0.5, 0.0, 0.5});

QuenchedSpec repeat(const OffspringLaw& law, std::size_t n) {
    return QuenchedSpec(std::vector<OffspringLaw>(n, law));
}

}  // namespace

TEST_CASE("quenched spec validation") {
    CHECK_THROWS_AS(QuenchedSpec({OffspringLaw::linear_fractional(1.0)}), std::invalid_argument);
    CHECK_THROWS_AS(repeat(kHalves, 65), std::invalid_argument);
    CHECK_NOTHROW(repeat(kHalves, 64));
    CHECK_THROWS_AS(exact_survival_quenched(repeat(kHalves, 3), 4), std::out_of_range);
    CHECK_THROWS_AS(exact_population_pmf(repeat(kHalves, 3), 4, 16), std::out_of_range);
}

TEST_CASE("exact survival examples") {
    CHECK(exact_survival_quenched(repeat(kHalves, 2), 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(exact_survival_quenched(repeat(kHalves, 2), 2) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(exact_survival_quenched(repeat(OffspringLaw::degenerate(0), 1), 1) == 0.0);
    CHECK(exact_survival_quenched(repeat(kHalves, 2), 0) == 1.0);
}

TEST_CASE("exact population pmf examples") {
    const auto one = exact_population_pmf(repeat(kHalves, 2), 1, 8);
    CHECK(one.pmf[0] == 0.5);
    CHECK(one.pmf[2] == 0.5);
    const auto two = exact_population_pmf(repeat(kHalves, 2), 2, 8);
    CHECK(two.exact_arithmetic);
    CHECK(two.pmf[0] == 0.625);
    CHECK(two.pmf[2] == 0.25);
    CHECK(two.pmf[4] == 0.125);
    CHECK(two.residual_mass == 0.0);
    CHECK_FALSE(two.cutoff_too_small);

    const auto small = exact_population_pmf(repeat(kHalves, 2), 2, 3);
    CHECK(small.residual_mass == doctest::Approx(0.125));
    CHECK(small.cutoff_too_small);
}

TEST_CASE("pmf properties on mixed specs") {
    const std::vector<OffspringLaw> laws{
        OffspringLaw::pmf({0.2, 0.3, 0.1, 0.4}), kHalves, OffspringLaw::pmf({0.1, 0.7, 0.2}),
        OffspringLaw::pmf({0.3, 0.1, 0.2, 0.1, 0.3}), kHalves, OffspringLaw::pmf({0.6, 0.4})};
    const QuenchedSpec spec(laws);
    double mean_product = 1.0;
    for (std::size_t n = 0; n <= laws.size(); ++n) {
        const auto p = exact_population_pmf(spec, n, 600);
        CHECK_FALSE(p.exact_arithmetic);
        CHECK(p.residual_mass < 1e-12);
        CHECK(1.0 - p.pmf[0] == doctest::Approx(exact_survival_quenched(spec, n)).epsilon(1e-12));
        double mean = 0.0;
        for (std::size_t j = 0; j < p.pmf.size(); ++j) {
            CHECK(p.pmf[j] >= 0.0);
            mean += j * p.pmf[j];
        }
        CHECK(mean == doctest::Approx(mean_product).epsilon(1e-10));
        if (n < laws.size()) {
            mean_product *= laws[n].mean();
        }
    }
}

TEST_CASE("binomial tail lemma examples") {
    auto c = check_binomial_tail_lemma(10, 0.5, 0.05);
    CHECK(c.exact == 0.0);
    CHECK(c.bound == doctest::Approx(0.25 * 0.05 / (0.45 * 0.45)));
    CHECK(c.holds);

    c = check_binomial_tail_lemma(4, 0.5, 0.25);
    CHECK(c.exact == doctest::Approx(0.25));
    CHECK(c.bound == doctest::Approx(1.0));
    CHECK(c.holds);

    c = check_binomial_tail_lemma(20, 0.5, 0.05);
    CHECK(c.exact == doctest::Approx(20.0 / 1048576.0).epsilon(1e-12));

    CHECK_THROWS_AS(check_binomial_tail_lemma(10, 0.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(check_binomial_tail_lemma(10, 1.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(check_binomial_tail_lemma(10, 0.5, 0.0), std::domain_error);
    CHECK_THROWS_AS(check_binomial_tail_lemma(0, 0.5, 0.2), std::domain_error);
}

TEST_CASE("binomial tail sweep") {
    const auto s = binomial_tail_sweep(200);
    CHECK(s.cases == 200 * 81);
    CHECK(s.all_hold());
    CHECK(s.max_exact_over_bound <= 1.0);
}

TEST_CASE("max lemma exact values") {
    // d = 1: E max(1, Z_1) with Z_1 in {0, 2}.
    const auto e = exact_max_expectation(kHalves, GapLaw::constant(1));
    REQUIRE(e.has_value());
    CHECK(*e == doctest::Approx(1.5).epsilon(1e-15));
    // d = 2: Z_1 = 2 w.p. 1/2, then Z_2 in {0, 2, 4} w.p. 1/4, 1/2, 1/4.
    CHECK(*exact_max_expectation(kHalves, GapLaw::constant(2)) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(*exact_max_expectation(OffspringLaw::degenerate(1), GapLaw::constant(5)) == 1.0);
    CHECK_FALSE(exact_max_expectation(OffspringLaw::poisson(1.0), GapLaw::constant(2)).has_value());
    CHECK_FALSE(exact_max_expectation(kHalves, GapLaw::geometric(2.0)).has_value());

    auto rng = StreamFactory(1, "max").stream(0, StreamRole::auxiliary);
    const auto gaps = GapLaw::pmf({0.0, 0.2, 0.3, 0.3, 0.2});
    const auto c = check_max_lemma(kHalves, gaps, 400'000, rng);
    REQUIRE(c.exact.has_value());
    CHECK(std::abs(c.estimate - *c.exact) < 4.0 * c.standard_error);
    CHECK(*c.exact <= c.bound);
    CHECK(c.holds);

    CHECK_THROWS_AS(check_max_lemma(OffspringLaw::poisson(1.2), gaps, 10, rng), std::invalid_argument);
}

TEST_CASE("max lemma monte carlo") {
    auto rng = StreamFactory(2, "max").stream(0, StreamRole::auxiliary);
    const auto c = check_max_lemma(OffspringLaw::poisson(1.0), GapLaw::geometric(3.0), 1'000'000, rng);
    CHECK(c.bound == doctest::Approx(4.0));
    CHECK(c.estimate + 3.0 * c.standard_error <= 4.0);
    CHECK(c.holds);

    for (const auto& row : max_lemma_sweep(20'000, 3)) {
        INFO(row.model);
        CHECK(row.check.holds);
    }
}
