#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpsre/environment.hpp"
#include "bpsre/offspring.hpp"

namespace bpsre::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 1,
    kConfigError = 2,
    kBudgetExceeded = 3,
};

/// Invalid configuration; `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error("config error at " + key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

inline const std::vector<std::string>& experiments() {
    static const std::vector<std::string> names{
        "simulate", "survival",    "embedded-survival", "ratio",      "yaglom",
        "flt-paths", "embed-check", "lemmas",            "meander-ref"};
    return names;
}

struct ExperimentConfig {
    std::string experiment = "survival";
    ModelPtr model;
    nlohmann::json model_echo;

    std::vector<std::uint64_t> n_grid{256, 512, 1024};
    std::vector<std::uint64_t> k_grid{256, 512, 1024};
    std::vector<double> t_grid{0.25, 0.5, 0.75, 1.0};
    std::uint64_t replicates = 10000;
    std::uint64_t target_survivors = 1000;
    std::uint64_t max_replicates = 50'000'000;
    std::uint64_t n = 4096;
    std::uint64_t n_max = 1000;
    std::uint64_t replicate = 0;
    std::uint64_t paths = 20;
    std::uint64_t steps = 1000;
    std::uint64_t samples = 10000;
    std::uint64_t mc_reps = 100000;
    std::uint64_t binomial_max_n = 200;
    std::uint64_t assumption_samples = 100000;
    std::uint64_t parent_cap = kDefaultParentCap;
    double scale = 0.0;

    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out_path;  ///< empty: stdout
    std::string format = "csv";
};

/// Offspring law from {"type": "pmf"|"degenerate"|"linear_fractional"|"poisson", ...}.
OffspringLaw parse_offspring_law(const nlohmann::json& j, const std::string& key);
/// Gap law from {"type": "pmf"|"constant"|"geometric"|"zeta", ...}.
GapLaw parse_gap_law(const nlohmann::json& j, const std::string& key);
/// Model from {"builtin": name} or {"gaps": ..., "nu": ..., "mu": ...}.
ModelPtr parse_model(const nlohmann::json& j, const std::string& key);

/// Validates and converts a configuration document. Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);

/// Runs the configured experiment, writing results to cfg.out_path (or
/// `out`) and a metadata block. Returns an ExitCode.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Command-line entry point: `bpsre <subcommand> [--config PATH] [--seed U64]
/// [--workers N] [--out PATH] [--format csv|json]`.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bpsre::cli
