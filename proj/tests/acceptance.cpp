// Acceptance checks; one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bpsre/cli.hpp"
#include "bpsre/embedding.hpp"
#include "bpsre/oracle.hpp"
#include "bpsre/parallel.hpp"
#include "bpsre/process.hpp"
#include "bpsre/reference.hpp"
#include "bpsre/stats.hpp"

using namespace bpsre;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

RunOptions run_options() {
    RunOptions o;
    o.workers = default_workers();
    return o;
}

OffspringLaw random_pmf(Philox& rng) {
    const auto size = 2 + static_cast<std::size_t>(rng.uniform() * 4.0);
    std::vector<double> w(size);
    double total = 0.0;
    for (auto& x : w) {
        x = rng.uniform() + 0.05;
        total += x;
    }
    for (auto& x : w) {
        x /= total;
    }
    return OffspringLaw::pmf(std::move(w));
}

Outcome oracle_equivalence() {
    auto rng = StreamFactory(101, "acceptance/specs").stream(0, StreamRole::auxiliary);
    auto sim = StreamFactory(101, "acceptance/mc").stream(0, StreamRole::population);
    const std::uint64_t reps = 100'000;
    int inside = 0;
    for (int spec_index = 0; spec_index < 20; ++spec_index) {
        const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 16.0);
        std::vector<OffspringLaw> laws;
        for (std::size_t i = 0; i < n; ++i) {
            laws.push_back(random_pmf(rng));
        }
        const double exact = exact_survival_quenched(QuenchedSpec(laws), n);
        std::uint64_t alive = 0;
        for (std::uint64_t r = 0; r < reps; ++r) {
            alive += !simulate_quenched(laws, sim).values.back().is_zero();
        }
        inside += wilson_interval(alive, reps, 3.0).contains(exact);
    }
    return {inside >= 19, fmt("%d/20 specs within 3 Wilson SE", inside)};
}

Outcome embedded_identities() {
    const auto halves = OffspringLaw::pmf({0.5, 0.0, 0.5});
    const std::vector<EmbeddedLawView> sets{
        {OffspringLaw::pmf({0.2, 0.3, 0.1, 0.4}), GapLaw::constant(3), halves},
        {OffspringLaw::linear_fractional(1.5), GapLaw::geometric(3.0), OffspringLaw::linear_fractional(1.0)},
        {OffspringLaw::linear_fractional(1.0 / 1.5), GapLaw::geometric(3.0), OffspringLaw::linear_fractional(1.0)},
        {OffspringLaw::linear_fractional(2.0), GapLaw::constant(2), OffspringLaw::linear_fractional(1.0)},
        {OffspringLaw::poisson(0.6), GapLaw::geometric(2.0), OffspringLaw::poisson(1.0)},
        {OffspringLaw::poisson(2.5), GapLaw::pmf({0.0, 0.5, 0.0, 0.5}), OffspringLaw::poisson(1.0)},
        {OffspringLaw::pmf({0.1, 0.2, 0.3, 0.4}), GapLaw::zeta(4.0), halves},
        {OffspringLaw::pmf({0.5, 0.0, 0.0, 0.5}), GapLaw::geometric(5.0), OffspringLaw::pmf({0.25, 0.5, 0.25})},
        {OffspringLaw::linear_fractional(0.8), GapLaw::zeta(3.5), OffspringLaw::linear_fractional(1.0)},
        {OffspringLaw::poisson(1.3), GapLaw::constant(1), halves},
    };
    double worst_a = 0.0;
    double worst_sigma = 0.0;
    for (const auto& v : sets) {
        const auto m = embedded_moments_numeric(v, default_gap_truncation(v.gaps));
        worst_a = std::max(worst_a, std::abs(m.mean - v.nu.mean()));
        worst_sigma = std::max(worst_sigma, std::abs(m.sigma - (v.nu.sigma() + v.mu.sigma() * (v.gaps.mean() - 1.0) / v.nu.mean())));
    }
    return {worst_a <= 1e-6 && worst_sigma <= 1e-4,
            fmt("10 sets, max |A err| %.2e, max |sigma err| %.2e", worst_a, worst_sigma)};
}

Outcome survival_plateau(const SurvivalTable& t) {
    const auto& r = t.rows;
    const double q1 = r[2].sqrt_n_p_hat / r[1].sqrt_n_p_hat;
    const double q2 = r[3].sqrt_n_p_hat / r[2].sqrt_n_p_hat;
    const bool ok = q1 >= 0.85 && q1 <= 1.15 && q2 >= 0.85 && q2 <= 1.15;
    return {ok, fmt("sqrt(n) p_hat %.4f %.4f %.4f %.4f; last ratios %.3f %.3f", r[0].sqrt_n_p_hat,
                    r[1].sqrt_n_p_hat, r[2].sqrt_n_p_hat, r[3].sqrt_n_p_hat, q1, q2)};
}

Outcome constant_ratio(const SurvivalTable& geometric3_sparse) {
    const std::uint64_t reps = 1'000'000;
    const std::vector<std::uint64_t> grid{1024, 2048, 4096};
    bool ok = true;
    std::string detail;
    for (const auto& [name, m] : {std::pair{"two_point_constant1", 1.0}, std::pair{"two_point_constant2", 2.0},
                                  std::pair{"two_point_geometric3", 3.0}}) {
        const auto model = builtin_model(name);
        const auto sparse = m == 3.0 ? geometric3_sparse
                                     : estimate_survival_curve(model, grid, reps, StreamFactory(104, "ratio/sparse"), run_options());
        const auto embedded = estimate_embedded_survival_curve(model, grid, reps, StreamFactory(104, "ratio/embedded"), run_options());
        const auto rep = constant_ratio_check(sparse, embedded, m);
        const bool case_ok = rep.within_tolerance && (m != 1.0 || rep.ci_contains_target);
        ok = ok && case_ok;
        detail += fmt("m=%g ratio %.3f (target %.3f, CI [%.3f, %.3f])%s; ", m, rep.ratio, rep.target,
                      rep.ci.lo, rep.ci.hi, case_ok ? "" : " out of tolerance");
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome yaglom_and_meander(const YaglomSample& y, bool yaglom_part) {
    if (yaglom_part) {
        const auto ks = ks_one_sample(y.column(1), rayleigh_cdf);
        return {ks.d <= 0.05, fmt("n=%llu, %llu survivors of %llu, KS %.4f", (unsigned long long)y.n,
                                  (unsigned long long)y.survivors, (unsigned long long)y.replicates, ks.d)};
    }
    auto rng = StreamFactory(106, "acceptance/meander").stream(0, StreamRole::auxiliary);
    const std::uint64_t samples = 100'000;
    const std::vector<double> times{0.5, 1.0};
    std::vector<double> half(samples);
    std::vector<double> one(samples);
    for (std::uint64_t i = 0; i < samples; ++i) {
        const auto v = sample_meander_at(10'000, times, rng);
        half[i] = v[0];
        one[i] = v[1];
    }
    const double d1 = ks_one_sample(one, rayleigh_cdf).d;
    const auto yaglom_half = y.column(0);
    const double d2 = ks_two_sample(yaglom_half, half);
    const double limit = 2.0 * ks_two_sample_critical(yaglom_half.size(), samples, 3);
    return {d1 <= 0.01 && d2 < limit,
            fmt("B+(1) KS %.4f; yaglom t=0.5 vs B+(0.5) two-sample KS %.4f (limit %.4f)", d1, d2, limit)};
}

Outcome lemma_sweeps() {
    const auto bin = binomial_tail_sweep(200);
    bool ok = bin.all_hold();
    std::string failing;
    for (const auto& row : max_lemma_sweep(100'000, 107)) {
        if (!row.check.holds) {
            ok = false;
            failing += " " + row.model;
        }
    }
    return {ok, fmt("binomial %llu cases, %llu failures; max lemma failures:%s",
                    (unsigned long long)bin.cases, (unsigned long long)bin.failures,
                    failing.empty() ? " none" : failing.c_str())};
}

Outcome extinction_proxy() {
    const std::vector<std::uint64_t> grid{10'000};
    bool ok = true;
    std::string detail;
    for (const auto& b : builtin_models()) {
        const auto t = estimate_survival_curve(b.model, grid, 10'000, StreamFactory(108, "extinction/" + b.name), run_options());
        const double extinct = 1.0 - t.rows[0].p_hat;
        ok = ok && extinct >= 0.95;
        detail += fmt("%s %.4f, ", b.name.c_str(), extinct);
    }
    detail.resize(detail.size() - 2);
    return {ok, "extinct by 1e4: " + detail};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "bpsre_acceptance";
    std::filesystem::create_directories(dir);
    const auto config = dir / "config.json";
    std::ofstream(config) << R"({"model":{"builtin":"two_point_geometric3"},
        "parameters":{"n_grid":[64,256,1024],"k_grid":[64,256],"replicates":20000,
                      "n":1024,"t_grid":[0.5,1.0],"target_survivors":1000,"assumption_samples":10000}})";
    bool ok = true;
    int compared = 0;
    for (const std::string experiment : {"survival", "embedded-survival", "ratio", "yaglom"}) {
        std::string reference;
        for (const std::string workers : {"1", "2", "8"}) {
            const auto out = (dir / (experiment + "_" + workers + ".csv")).string();
            const std::vector<std::string> args{"bpsre", experiment, "--config", config.string(),
                                                "--seed", "42", "--workers", workers, "--out", out};
            std::vector<const char*> argv;
            for (const auto& a : args) {
                argv.push_back(a.c_str());
            }
            std::ostringstream sink;
            if (cli::main_entry(static_cast<int>(argv.size()), argv.data(), sink, sink) != cli::kOk) {
                return {false, experiment + " failed to run"};
            }
            const auto bytes = slurp(out) + slurp(out + ".meta.json");
            if (workers == "1") {
                reference = bytes;
            } else {
                ok = ok && bytes == reference && !bytes.empty();
                ++compared;
            }
        }
    }
    return {ok, fmt("%d result/metadata pairs byte-identical to the 1-worker run", ok ? compared : 0)};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        const auto start = std::chrono::steady_clock::now();
        const auto o = check();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %d: %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    };

    SurvivalTable geometric3;
    YaglomSample yaglom;

    report(1, "oracle equivalence", oracle_equivalence);
    report(2, "embedded-law identities", embedded_identities);
    report(3, "survival-tail plateau", [&] {
        const std::vector<std::uint64_t> grid{512, 1024, 2048, 4096};
        geometric3 = estimate_survival_curve(builtin_model("two_point_geometric3"), grid, 1'000'000,
                                             StreamFactory(103, "ratio/sparse"), run_options());
        return survival_plateau(geometric3);
    });
    report(4, "constant ratio", [&] {
        // The m = 3 sparse estimate reuses the criterion 3 trajectories (grid tail 1024..4096).
        SurvivalTable tail;
        tail.rows.assign(geometric3.rows.begin() + 1, geometric3.rows.end());
        return constant_ratio(tail);
    });
    report(5, "yaglom rayleigh limit", [&] {
        const std::vector<double> times{0.5, 1.0};
        YaglomOptions opts;
        opts.run = run_options();
        yaglom = yaglom_sample(builtin_model("two_point_geometric3"), 4096, times, 5000,
                               StreamFactory(105, "yaglom"), opts);
        return yaglom_and_meander(yaglom, true);
    });
    report(6, "meander reference", [&] { return yaglom_and_meander(yaglom, false); });
    report(7, "lemma sweeps", lemma_sweeps);
    report(8, "almost-sure extinction proxy", extinction_proxy);
    report(9, "determinism across worker counts", determinism);
    return failures == 0 ? 0 : 1;
}
