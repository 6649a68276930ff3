#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpsre/environment.hpp"
#include "bpsre/process.hpp"
#include "bpsre/rng.hpp"

namespace bpsre {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

struct SurvivalRow {
    std::uint64_t n = 0;
    std::uint64_t replicates = 0;
    std::uint64_t survivors = 0;
    double p_hat = 0.0;
    Interval ci;  ///< Wilson 95%
    double sqrt_n_p_hat = 0.0;
};

struct SurvivalTable {
    std::vector<SurvivalRow> rows;

    /// Header: n,reps,survivors,p_hat,ci_lo,ci_hi,sqrt_n_p_hat
    void write_csv(std::ostream& out) const;
};

SurvivalTable make_survival_table(std::span<const std::uint64_t> grid, std::uint64_t replicates,
                                  std::span<const std::uint64_t> survivors);

struct RunOptions {
    unsigned workers = 1;
    std::uint64_t chunk = 1024;
    SimOptions sim;
};

/// P{Z_n > 0} on an increasing grid; one path per replicate serves every row.
/// Replicate r uses the streams of `streams` at index r.
SurvivalTable estimate_survival_curve(const ModelPtr& model, std::span<const std::uint64_t> n_grid,
                                      std::uint64_t replicates, const StreamFactory& streams,
                                      const RunOptions& options = {});

/// P{Z_{S_k} > 0} on an increasing grid, via the direct embedded simulator.
SurvivalTable estimate_embedded_survival_curve(const ModelPtr& model,
                                               std::span<const std::uint64_t> k_grid,
                                               std::uint64_t replicates,
                                               const StreamFactory& streams,
                                               const RunOptions& options = {});

struct RatioReport {
    double c_sparse = 0.0;
    double c_embed = 0.0;
    double ratio = 0.0;
    Interval ci;  ///< 95%, delta method on log ratio
    double target = 0.0;  ///< sqrt(m)
    bool ci_contains_target = false;
    bool within_tolerance = false;  ///< |ratio / target - 1| <= 0.1
    bool pass = false;
    bool sparse_plateau = true;
    bool embed_plateau = true;
};

/// C_Sparse / C_Embed from the last rows of the two tables, compared with
/// sqrt(m). A table whose last two sqrt(n) p_hat values differ by more than
/// 15% is flagged as not having reached its plateau.
RatioReport constant_ratio_check(const SurvivalTable& sparse, const SurvivalTable& embedded,
                                 double m);

/// True when the last two sqrt(n) p_hat values are within the relative band.
bool plateau_reached(const SurvivalTable& table, double band = 0.15);

struct YaglomSample {
    std::uint64_t n = 0;
    std::vector<double> t_grid;
    double scale = 0.0;  ///< v sqrt(n/m) unless overridden
    /// values[i][j] = log Z_{floor(n t_j)} / scale for the i-th surviving path.
    std::vector<std::vector<double>> values;
    std::uint64_t survivors = 0;
    std::uint64_t replicates = 0;
    /// Surviving paths with Z = 0 at some t < 1 (impossible; kept as a check).
    std::uint64_t zero_flags = 0;

    std::vector<double> column(std::size_t j) const;
};

struct YaglomOptions {
    RunOptions run;
    /// Replicates per batch; the quota is filled from whole batches, taking
    /// survivors in replicate order, so results do not depend on workers.
    std::uint64_t batch = 16384;
    std::uint64_t max_replicates = 50'000'000;
    /// Normalisation override; 0 means v sqrt(n/m).
    double scale = 0.0;
};

class BudgetExceeded : public std::runtime_error {
  public:
    BudgetExceeded(const std::string& what, YaglomSample partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const YaglomSample& partial() const noexcept { return partial_; }

  private:
    YaglomSample partial_;
};

/// Simulates until `target_survivors` paths have Z_n > 0. Throws
/// std::invalid_argument if v sqrt(n/m) < 5 (without a scale override) or
/// target_survivors < 1000, and BudgetExceeded past max_replicates.
YaglomSample yaglom_sample(const ModelPtr& model, std::uint64_t n, std::span<const double> t_grid,
                           std::uint64_t target_survivors, const StreamFactory& streams,
                           const YaglomOptions& options = {});

/// Asymptotic Kolmogorov quantiles at levels 10%, 5%, 1%, 0.1%.
inline constexpr std::array<double, 4> kKsLevels{0.10, 0.05, 0.01, 0.001};
inline constexpr std::array<double, 4> kKolmogorovQuantiles{1.22385, 1.35810, 1.62762, 1.94947};

struct KsResult {
    double d = 0.0;
    std::uint64_t n = 0;
    /// critical[i] rejects at level kKsLevels[i].
    std::array<double, 4> critical{};
};

/// Kolmogorov distance to a continuous CDF. Throws std::invalid_argument on
/// an empty sample.
KsResult ks_one_sample(std::span<const double> sample, const std::function<double(double)>& cdf);

/// sup |F_a - F_b|. Throws std::invalid_argument if either sample is empty.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Two-sample critical value c_alpha sqrt((n + m) / (n m)); level index as kKsLevels.
double ks_two_sample_critical(std::uint64_t n, std::uint64_t m, std::size_t level);

}  // namespace bpsre
