#include "bpsre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "bpsre/parallel.hpp"

namespace bpsre {

namespace {

void require_increasing(std::span<const std::uint64_t> grid, const char* what) {
    if (grid.empty()) {
        throw std::invalid_argument(std::string(what) + " must be nonempty");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= grid[i - 1]) {
            throw std::invalid_argument(std::string(what) + " must be increasing");
        }
    }
}

// Sums per-chunk survivor counts; integer addition keeps the result
// independent of which worker handled which chunk.
template <class PerReplicate>
std::vector<std::uint64_t> count_survivors(std::size_t rows, std::uint64_t replicates,
                                           const RunOptions& options, PerReplicate&& alive) {
    const std::uint64_t chunk = std::max<std::uint64_t>(options.chunk, 1);
    const std::uint64_t chunks = (replicates + chunk - 1) / chunk;
    std::vector<std::vector<std::uint64_t>> partial(chunks, std::vector<std::uint64_t>(rows, 0));
    parallel_chunks(replicates, chunk, options.workers, [&](std::uint64_t begin, std::uint64_t end) {
        auto& local = partial[begin / chunk];
        for (std::uint64_t r = begin; r < end; ++r) {
            alive(r, local);
        }
    });
    std::vector<std::uint64_t> total(rows, 0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < rows; ++i) {
            total[i] += p[i];
        }
    }
    return total;
}

}  // namespace

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
    if (trials == 0) {
        return {0.0, 1.0};
    }
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // Rounding can push an endpoint past p at the boundaries.
    return {std::clamp(std::min(centre - half, p), 0.0, 1.0),
            std::clamp(std::max(centre + half, p), 0.0, 1.0)};
}

void SurvivalTable::write_csv(std::ostream& out) const {
    out << "n,reps,survivors,p_hat,ci_lo,ci_hi,sqrt_n_p_hat\n";
    const auto old = out.precision(17);
    for (const auto& r : rows) {
        out << r.n << ',' << r.replicates << ',' << r.survivors << ',' << r.p_hat << ','
            << r.ci.lo << ',' << r.ci.hi << ',' << r.sqrt_n_p_hat << '\n';
    }
    out.precision(old);
}

SurvivalTable make_survival_table(std::span<const std::uint64_t> grid, std::uint64_t replicates,
                                  std::span<const std::uint64_t> survivors) {
    if (grid.size() != survivors.size()) {
        throw std::invalid_argument("grid and survivor counts differ in length");
    }
    SurvivalTable table;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (survivors[i] > replicates) {
            throw std::invalid_argument("survivors exceed replicates");
        }
        SurvivalRow row;
        row.n = grid[i];
        row.replicates = replicates;
        row.survivors = survivors[i];
        row.p_hat = replicates == 0 ? 0.0
                                    : static_cast<double>(survivors[i]) /
                                          static_cast<double>(replicates);
        row.ci = wilson_interval(survivors[i], replicates);
        row.sqrt_n_p_hat = std::sqrt(static_cast<double>(grid[i])) * row.p_hat;
        table.rows.push_back(row);
    }
    return table;
}

SurvivalTable estimate_survival_curve(const ModelPtr& model, std::span<const std::uint64_t> n_grid,
                                      std::uint64_t replicates, const StreamFactory& streams,
                                      const RunOptions& options) {
    require_increasing(n_grid, "n_grid");
    const auto survivors = count_survivors(
        n_grid.size(), replicates, options, [&](std::uint64_t r, std::vector<std::uint64_t>& acc) {
            SparseEnvironment env(model, streams.stream(r, StreamRole::gaps),
                                  streams.stream(r, StreamRole::laws));
            auto rng = streams.stream(r, StreamRole::population);
            const auto z = sample_at_generations(env, n_grid, rng, options.sim);
            for (std::size_t i = 0; i < z.size() && !z[i].is_zero(); ++i) {
                ++acc[i];
            }
        });
    return make_survival_table(n_grid, replicates, survivors);
}

SurvivalTable estimate_embedded_survival_curve(const ModelPtr& model,
                                               std::span<const std::uint64_t> k_grid,
                                               std::uint64_t replicates,
                                               const StreamFactory& streams,
                                               const RunOptions& options) {
    require_increasing(k_grid, "k_grid");
    const std::uint64_t k_max = k_grid.back();
    const auto survivors = count_survivors(
        k_grid.size(), replicates, options, [&](std::uint64_t r, std::vector<std::uint64_t>& acc) {
            const auto path = simulate_embedded(model, k_max, streams, r, EmbeddedMethod::direct,
                                                options.sim);
            const auto ext = extinction_time(path);
            for (std::size_t i = 0; i < k_grid.size() && ext.alive_at(k_grid[i]); ++i) {
                ++acc[i];
            }
        });
    return make_survival_table(k_grid, replicates, survivors);
}

bool plateau_reached(const SurvivalTable& table, double band) {
    const auto& rows = table.rows;
    if (rows.size() < 2) {
        return false;
    }
    const double a = rows[rows.size() - 2].sqrt_n_p_hat;
    const double b = rows.back().sqrt_n_p_hat;
    if (a <= 0.0 || b <= 0.0) {
        return false;
    }
    return std::abs(b / a - 1.0) <= band;
}

RatioReport constant_ratio_check(const SurvivalTable& sparse, const SurvivalTable& embedded,
                                 double m) {
    if (sparse.rows.empty() || embedded.rows.empty()) {
        throw std::invalid_argument("ratio check needs nonempty tables");
    }
    if (!(m > 0.0)) {
        throw std::invalid_argument("m must be positive");
    }
    const auto& s = sparse.rows.back();
    const auto& e = embedded.rows.back();
    RatioReport out;
    out.c_sparse = s.sqrt_n_p_hat;
    out.c_embed = e.sqrt_n_p_hat;
    out.target = std::sqrt(m);
    out.sparse_plateau = plateau_reached(sparse);
    out.embed_plateau = plateau_reached(embedded);
    if (s.survivors == 0 || e.survivors == 0) {
        out.ratio = std::numeric_limits<double>::quiet_NaN();
        out.ci = {0.0, std::numeric_limits<double>::infinity()};
        return out;
    }
    out.ratio = out.c_sparse / out.c_embed;
    // Var log p_hat ~ (1 - p) / (N p).
    const double var = (1.0 - s.p_hat) / static_cast<double>(s.survivors) +
                       (1.0 - e.p_hat) / static_cast<double>(e.survivors);
    const double half = kZ95 * std::sqrt(var);
    out.ci = {out.ratio * std::exp(-half), out.ratio * std::exp(half)};
    out.ci_contains_target = out.ci.contains(out.target);
    out.within_tolerance = std::abs(out.ratio / out.target - 1.0) <= 0.1;
    out.pass = out.ci_contains_target || out.within_tolerance;
    return out;
}

std::vector<double> YaglomSample::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& row : values) {
        out.push_back(row.at(j));
    }
    return out;
}

YaglomSample yaglom_sample(const ModelPtr& model, std::uint64_t n, std::span<const double> t_grid,
                           std::uint64_t target_survivors, const StreamFactory& streams,
                           const YaglomOptions& options) {
    if (t_grid.empty()) {
        throw std::invalid_argument("t_grid must be nonempty");
    }
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        if (!(t_grid[j] >= 0.0 && t_grid[j] <= 1.0) || (j > 0 && t_grid[j] <= t_grid[j - 1])) {
            throw std::invalid_argument("t_grid must be increasing within [0,1]");
        }
    }
    if (target_survivors < 1000) {
        throw std::invalid_argument("target_survivors must be at least 1000");
    }
    YaglomSample out;
    out.n = n;
    out.t_grid.assign(t_grid.begin(), t_grid.end());
    out.scale = options.scale;
    if (out.scale == 0.0) {
        out.scale = std::sqrt(model->v2() * static_cast<double>(n) / model->m());
        if (!(out.scale >= 5.0)) {
            throw std::invalid_argument("v sqrt(n/m) < 5; increase n or set a scale");
        }
    } else if (!(out.scale > 0.0)) {
        throw std::invalid_argument("scale must be positive");
    }

    std::vector<std::uint64_t> gens;
    for (double t : t_grid) {
        gens.push_back(static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * t)));
    }
    gens.push_back(n);

    const std::uint64_t batch = std::max<std::uint64_t>(options.batch, 1);
    std::vector<std::optional<std::vector<Count>>> results;
    for (std::uint64_t start = 0; out.survivors < target_survivors;) {
        if (start >= options.max_replicates) {
            throw BudgetExceeded("yaglom quota not reached within max_replicates", std::move(out));
        }
        const std::uint64_t size = std::min(batch, options.max_replicates - start);
        results.assign(size, std::nullopt);
        parallel_chunks(size, options.run.chunk, options.run.workers,
                        [&](std::uint64_t begin, std::uint64_t end) {
                            for (std::uint64_t i = begin; i < end; ++i) {
                                const std::uint64_t r = start + i;
                                SparseEnvironment env(model, streams.stream(r, StreamRole::gaps),
                                                      streams.stream(r, StreamRole::laws));
                                auto rng = streams.stream(r, StreamRole::population);
                                auto z = sample_at_generations(env, gens, rng, options.run.sim);
                                if (!z.back().is_zero()) {
                                    results[i] = std::move(z);
                                }
                            }
                        });
        for (std::uint64_t i = 0; i < size && out.survivors < target_survivors; ++i) {
            out.replicates = start + i + 1;
            if (!results[i]) {
                continue;
            }
            const auto& z = *results[i];
            std::vector<double> row(t_grid.size());
            for (std::size_t j = 0; j < t_grid.size(); ++j) {
                if (z[j].is_zero()) {
                    ++out.zero_flags;
                    row[j] = 0.0;
                } else {
                    row[j] = z[j].log() / out.scale;
                }
            }
            out.values.push_back(std::move(row));
            ++out.survivors;
        }
        start += size;
    }
    return out;
}

KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) {
        throw std::invalid_argument("KS test needs a nonempty sample");
    }
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    KsResult out;
    out.d = d;
    out.n = x.size();
    for (std::size_t i = 0; i < kKolmogorovQuantiles.size(); ++i) {
        out.critical[i] = kKolmogorovQuantiles[i] / std::sqrt(n);
    }
    return out;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("KS test needs nonempty samples");
    }
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) {
            ++i;
        }
        while (j < y.size() && y[j] == v) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    return d;
}

double ks_two_sample_critical(std::uint64_t n, std::uint64_t m, std::size_t level) {
    const double a = static_cast<double>(n);
    const double b = static_cast<double>(m);
    return kKolmogorovQuantiles.at(level) * std::sqrt((a + b) / (a * b));
}

}  // namespace bpsre
