#include "bpsre/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/version.hpp>

#include "bpsre/embedding.hpp"
#include "bpsre/oracle.hpp"
#include "bpsre/parallel.hpp"
#include "bpsre/process.hpp"
#include "bpsre/reference.hpp"
#include "bpsre/stats.hpp"

namespace bpsre::cli {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

std::string join(const std::string& key, const std::string& child) {
    return key.empty() ? child : key + "." + child;
}

void require_object(const json& j, const std::string& key) {
    if (!j.is_object()) {
        throw ConfigError(key.empty() ? "<root>" : key, "expected an object");
    }
}

void allow_keys(const json& j, const std::string& key, std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                    [&](const char* a) { return item.key() == a; });
        if (!ok) {
            throw ConfigError(join(key, item.key()), "unknown key");
        }
    }
}

const json& member(const json& j, const std::string& key, const char* name) {
    if (!j.contains(name)) {
        throw ConfigError(join(key, name), "missing");
    }
    return j.at(name);
}

double number(const json& j, const std::string& key) {
    if (!j.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    return j.get<double>();
}

std::uint64_t unsigned_int(const json& j, const std::string& key) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
        throw ConfigError(key, "expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

std::string string_value(const json& j, const std::string& key) {
    if (!j.is_string()) {
        throw ConfigError(key, "expected a string");
    }
    return j.get<std::string>();
}

// Weights as an array indexed by value, or an object {"value": weight}.
std::vector<double> weights(const json& j, const std::string& key) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(number(j[i], key + "[" + std::to_string(i) + "]"));
        }
    } else if (j.is_object()) {
        for (const auto& item : j.items()) {
            std::uint64_t v = 0;
            const auto& s = item.key();
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v > 1'000'000) {
                throw ConfigError(join(key, s), "expected a nonnegative integer key");
            }
            if (out.size() <= v) {
                out.resize(v + 1, 0.0);
            }
            out[v] = number(item.value(), join(key, s));
        }
    } else {
        throw ConfigError(key, "expected an array or object of weights");
    }
    return out;
}

template <class F>
auto wrap(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

std::vector<std::uint64_t> uint_grid(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(key, "expected a nonempty array");
    }
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(unsigned_int(j[i], key + "[" + std::to_string(i) + "]"));
        if (i > 0 && out[i] <= out[i - 1]) {
            throw ConfigError(key, "must be increasing");
        }
    }
    return out;
}

std::vector<double> real_grid(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty()) {
        throw ConfigError(key, "expected a nonempty array");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(number(j[i], key + "[" + std::to_string(i) + "]"));
        if (!(out[i] >= 0.0 && out[i] <= 1.0) || (i > 0 && out[i] <= out[i - 1])) {
            throw ConfigError(key, "must be increasing within [0,1]");
        }
    }
    return out;
}

NuGenerator parse_nu(const json& j, const std::string& key) {
    require_object(j, key);
    const auto type = string_value(member(j, key, "type"), join(key, "type"));
    if (type == "fixed") {
        allow_keys(j, key, {"type", "law"});
        return NuGenerator::fixed(parse_offspring_law(member(j, key, "law"), join(key, "law")));
    }
    if (type == "lf_two_point") {
        allow_keys(j, key, {"type", "c"});
        const double c = number(member(j, key, "c"), join(key, "c"));
        return wrap(join(key, "c"), [&] { return NuGenerator::lf_two_point(c); });
    }
    if (type == "lf_discrete_gaussian") {
        allow_keys(j, key, {"type", "sd"});
        const double sd = number(member(j, key, "sd"), join(key, "sd"));
        return wrap(join(key, "sd"), [&] { return NuGenerator::lf_discrete_gaussian(sd); });
    }
    if (type == "lf_random_mean") {
        allow_keys(j, key, {"type", "log_mean_law"});
        const auto law_key = join(key, "log_mean_law");
        const auto& law = member(j, key, "log_mean_law");
        require_object(law, law_key);
        const auto law_type = string_value(member(law, law_key, "type"), join(law_key, "type"));
        if (law_type == "two_point") {
            allow_keys(law, law_key, {"type", "c"});
            const double c = number(member(law, law_key, "c"), join(law_key, "c"));
            return wrap(join(law_key, "c"), [&] { return NuGenerator::lf_two_point(c); });
        }
        if (law_type == "discrete_gaussian") {
            allow_keys(law, law_key, {"type", "sd"});
            const double sd = number(member(law, law_key, "sd"), join(law_key, "sd"));
            return wrap(join(law_key, "sd"), [&] { return NuGenerator::lf_discrete_gaussian(sd); });
        }
        throw ConfigError(join(law_key, "type"), "unknown log-mean law '" + law_type + "'");
    }
    if (type == "choice") {
        allow_keys(j, key, {"type", "laws", "probabilities"});
        const auto& laws_json = member(j, key, "laws");
        const auto laws_key = join(key, "laws");
        if (!laws_json.is_array() || laws_json.empty()) {
            throw ConfigError(laws_key, "expected a nonempty array");
        }
        std::vector<OffspringLaw> laws;
        for (std::size_t i = 0; i < laws_json.size(); ++i) {
            laws.push_back(parse_offspring_law(laws_json[i], laws_key + "[" + std::to_string(i) + "]"));
        }
        auto probs = weights(member(j, key, "probabilities"), join(key, "probabilities"));
        return wrap(key, [&] { return NuGenerator::choice(std::move(laws), std::move(probs)); });
    }
    throw ConfigError(join(key, "type"), "unknown nu generator '" + type + "'");
}

// ---------------------------------------------------------------- output

std::string num(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

json finite_or_null(double x) {
    return std::isfinite(x) ? json(x) : json(nullptr);
}

json assumptions_json(const AssumptionReport& r) {
    auto mc = [](const MonteCarloValue& v) {
        return json{{"estimate", finite_or_null(v.estimate)},
                    {"standard_error", finite_or_null(v.standard_error)}};
    };
    return json{
        {"mean_log_a", r.mean_log_a},
        {"mean_log_a_mc", mc(r.mean_log_a_mc)},
        {"a1_exact", r.a1_exact},
        {"var_log_a", r.var_log_a_declared},
        {"var_log_a_mc", mc(r.var_log_a_mc)},
        {"mean_mu", r.mean_mu},
        {"mean_gap", r.mean_gap},
        {"gap_moment_3_2", finite_or_null(r.gap_moment_3_2)},
        {"gap_moment_3_2_mc", mc(r.gap_moment_3_2_mc)},
        {"a3_violated", r.a3_violated},
        {"kappa_level", r.kappa_level},
        {"log_kappa4", finite_or_null(r.log_kappa4)},
        {"log_kappa4_mc", mc(r.log_kappa4_mc)},
        {"flags", r.flags},
    };
}

json config_echo(const ExperimentConfig& c) {
    // Worker count and output location are excluded: results do not depend on them.
    return json{
        {"experiment", c.experiment},
        {"model", c.model_echo},
        {"parameters",
         {{"n_grid", c.n_grid},
          {"k_grid", c.k_grid},
          {"t_grid", c.t_grid},
          {"replicates", c.replicates},
          {"target_survivors", c.target_survivors},
          {"max_replicates", c.max_replicates},
          {"n", c.n},
          {"n_max", c.n_max},
          {"replicate", c.replicate},
          {"paths", c.paths},
          {"steps", c.steps},
          {"samples", c.samples},
          {"mc_reps", c.mc_reps},
          {"binomial_max_n", c.binomial_max_n},
          {"assumption_samples", c.assumption_samples},
          {"parent_cap", c.parent_cap},
          {"scale", c.scale}}},
        {"format", c.format},
    };
}

json table_json(const SurvivalTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"n", r.n},
                        {"reps", r.replicates},
                        {"survivors", r.survivors},
                        {"p_hat", r.p_hat},
                        {"ci_lo", r.ci.lo},
                        {"ci_hi", r.ci.hi},
                        {"sqrt_n_p_hat", r.sqrt_n_p_hat}});
    }
    return rows;
}

json ks_json(const KsResult& k) {
    json crit = json::object();
    for (std::size_t i = 0; i < kKsLevels.size(); ++i) {
        crit[num(kKsLevels[i])] = k.critical[i];
    }
    return json{{"d", k.d}, {"n", k.n}, {"critical", crit}};
}

struct Result {
    json report = json::object();
    std::string csv;
    int code = kOk;
};

RunOptions run_options(const ExperimentConfig& c) {
    RunOptions o;
    o.workers = c.workers;
    o.sim.parent_cap = c.parent_cap;
    return o;
}

// ---------------------------------------------------------------- experiments

Result run_simulate(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "simulate");
    SimOptions sim;
    sim.parent_cap = c.parent_cap;
    auto [path, env] = simulate_bpsre(c.model, c.n_max, streams, c.replicate, sim);
    Result r;
    std::ostringstream csv;
    write_trajectory_csv(csv, path, env);
    r.csv = csv.str();
    json pop = json::array();
    for (const auto& z : path.values) {
        pop.push_back(z.to_string());
    }
    std::vector<std::uint64_t> marks;
    for (auto s : env.marks()) {
        if (s <= c.n_max) {
            marks.push_back(s);
        }
    }
    r.report = {{"replicate", c.replicate},
                {"population", pop},
                {"marks", marks},
                {"extinction", path.extinction ? json(*path.extinction) : json(nullptr)}};
    return r;
}

Result survival_result(const SurvivalTable& table) {
    Result r;
    std::ostringstream csv;
    table.write_csv(csv);
    r.csv = csv.str();
    r.report = {{"rows", table_json(table)}, {"plateau_reached", plateau_reached(table)}};
    return r;
}

Result run_survival(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "survival");
    return survival_result(
        estimate_survival_curve(c.model, c.n_grid, c.replicates, streams, run_options(c)));
}

Result run_embedded_survival(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "embedded-survival");
    return survival_result(
        estimate_embedded_survival_curve(c.model, c.k_grid, c.replicates, streams, run_options(c)));
}

Result run_ratio(const ExperimentConfig& c) {
    const auto sparse = estimate_survival_curve(c.model, c.n_grid, c.replicates,
                                                StreamFactory(c.seed, "ratio/sparse"), run_options(c));
    const auto embedded =
        estimate_embedded_survival_curve(c.model, c.k_grid, c.replicates,
                                         StreamFactory(c.seed, "ratio/embedded"), run_options(c));
    const auto rep = constant_ratio_check(sparse, embedded, c.model->m());
    Result r;
    r.csv = "c_sparse,c_embed,ratio,ci_lo,ci_hi,target,ci_contains_target,within_tolerance,pass,"
            "sparse_plateau,embed_plateau\n" +
            num(rep.c_sparse) + ',' + num(rep.c_embed) + ',' + num(rep.ratio) + ',' +
            num(rep.ci.lo) + ',' + num(rep.ci.hi) + ',' + num(rep.target) + ',' +
            std::to_string(rep.ci_contains_target) + ',' + std::to_string(rep.within_tolerance) +
            ',' + std::to_string(rep.pass) + ',' + std::to_string(rep.sparse_plateau) + ',' +
            std::to_string(rep.embed_plateau) + '\n';
    r.report = {{"c_sparse", rep.c_sparse},
                {"c_embed", rep.c_embed},
                {"ratio", finite_or_null(rep.ratio)},
                {"ci", {finite_or_null(rep.ci.lo), finite_or_null(rep.ci.hi)}},
                {"target", rep.target},
                {"ci_contains_target", rep.ci_contains_target},
                {"within_tolerance", rep.within_tolerance},
                {"pass", rep.pass},
                {"sparse_plateau", rep.sparse_plateau},
                {"embed_plateau", rep.embed_plateau},
                {"sparse", table_json(sparse)},
                {"embedded", table_json(embedded)}};
    return r;
}

YaglomOptions yaglom_options(const ExperimentConfig& c) {
    YaglomOptions o;
    o.run = run_options(c);
    o.max_replicates = c.max_replicates;
    o.scale = c.scale;
    return o;
}

Result yaglom_result(const YaglomSample& s) {
    Result r;
    std::string csv = "path";
    for (double t : s.t_grid) {
        csv += ",t_" + num(t);
    }
    csv += '\n';
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        csv += std::to_string(i);
        for (double v : s.values[i]) {
            csv += ',' + num(v);
        }
        csv += '\n';
    }
    r.csv = std::move(csv);
    r.report = {{"n", s.n},
                {"t_grid", s.t_grid},
                {"scale", s.scale},
                {"survivors", s.survivors},
                {"replicates", s.replicates},
                {"zero_flags", s.zero_flags},
                {"values", s.values}};
    if (!s.values.empty() && s.t_grid.back() == 1.0) {
        const auto col = s.column(s.t_grid.size() - 1);
        r.report["ks_rayleigh_t1"] = ks_json(ks_one_sample(col, rayleigh_cdf));
    }
    return r;
}

Result run_yaglom(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "yaglom");
    try {
        return yaglom_result(
            yaglom_sample(c.model, c.n, c.t_grid, c.target_survivors, streams, yaglom_options(c)));
    } catch (const BudgetExceeded& e) {
        auto r = yaglom_result(e.partial());
        r.report["error"] = e.what();
        r.code = kBudgetExceeded;
        return r;
    }
}

Result run_flt_paths(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "flt-paths");
    std::vector<double> grid;
    for (std::uint64_t i = 0; i <= c.steps; ++i) {
        grid.push_back(static_cast<double>(i) / static_cast<double>(c.steps));
    }
    YaglomSample s;
    Result r;
    try {
        s = yaglom_sample(c.model, c.n, grid, c.target_survivors, streams, yaglom_options(c));
    } catch (const BudgetExceeded& e) {
        s = e.partial();
        r.report["error"] = e.what();
        r.code = kBudgetExceeded;
    }
    const std::size_t keep = std::min<std::size_t>(c.paths, s.values.size());
    std::string csv = "path,t,value\n";
    json paths = json::array();
    for (std::size_t i = 0; i < keep; ++i) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            csv += std::to_string(i) + ',' + num(grid[j]) + ',' + num(s.values[i][j]) + '\n';
        }
        paths.push_back(s.values[i]);
    }
    r.csv = std::move(csv);
    r.report["n"] = s.n;
    r.report["scale"] = s.scale;
    r.report["t_grid"] = grid;
    r.report["paths"] = paths;
    r.report["survivors"] = s.survivors;
    r.report["replicates"] = s.replicates;
    return r;
}

Result run_embed_check(const ExperimentConfig& c) {
    Result r;
    std::string csv =
        "atom,a_numeric,a_formula,a_error,sigma_numeric,sigma_formula,sigma_error,kappa,kappa_residual,pass\n";
    json rows = json::array();
    const auto& gaps = c.model->gaps();
    const auto trunc = default_gap_truncation(gaps);
    bool all = true;
    const auto& atoms = c.model->nu().atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const EmbeddedLawView view{atoms[i], gaps, c.model->mu()};
        const auto numeric = embedded_moments_numeric(view, trunc);
        const double a = embedded_mean(view);
        const double sigma = embedded_sigma(view);
        const double a_err = std::abs(numeric.mean - a);
        const double s_err = std::abs(numeric.sigma - sigma);
        const bool pass = a_err <= 1e-6 && s_err <= 1e-4;
        all = all && pass;
        double kappa = std::numeric_limits<double>::quiet_NaN();
        double kappa_res = std::numeric_limits<double>::quiet_NaN();
        try {
            const auto k = embedded_kappa(view, 1, std::min<std::uint64_t>(trunc, 256));
            kappa = k.value;
            kappa_res = k.residual;
        } catch (const UnsupportedVariant&) {
        }
        csv += std::to_string(i) + ',' + num(numeric.mean) + ',' + num(a) + ',' + num(a_err) + ',' +
               num(numeric.sigma) + ',' + num(sigma) + ',' + num(s_err) + ',' + num(kappa) + ',' +
               num(kappa_res) + ',' + std::to_string(pass) + '\n';
        rows.push_back({{"atom", i},
                        {"a_numeric", numeric.mean},
                        {"a_formula", a},
                        {"sigma_numeric", numeric.sigma},
                        {"sigma_formula", sigma},
                        {"gap_residual", numeric.residual},
                        {"kappa", finite_or_null(kappa)},
                        {"kappa_residual", finite_or_null(kappa_res)},
                        {"pass", pass}});
    }
    r.csv = std::move(csv);
    r.report = {{"gap_truncation", trunc}, {"rows", rows}, {"pass", all}};
    r.code = all ? kOk : kCheckFailed;
    return r;
}

Result run_lemmas(const ExperimentConfig& c) {
    const auto bin = binomial_tail_sweep(c.binomial_max_n);
    const auto max_rows = max_lemma_sweep(c.mc_reps, c.seed);
    bool all = bin.all_hold();
    std::string csv = "check,model,cases,failures,estimate,standard_error,bound,exact,holds\n";
    csv += "binomial_tail,," + std::to_string(bin.cases) + ',' + std::to_string(bin.failures) + ',' +
           num(bin.max_exact_over_bound) + ",,1,," + std::to_string(bin.all_hold()) + '\n';
    json max_json = json::array();
    for (const auto& row : max_rows) {
        const auto& m = row.check;
        all = all && m.holds;
        csv += "max_lemma," + row.model + ",1,0," + num(m.estimate) + ',' + num(m.standard_error) +
               ',' + num(m.bound) + ',' + (m.exact ? num(*m.exact) : std::string()) + ',' +
               std::to_string(m.holds) + '\n';
        max_json.push_back({{"model", row.model},
                            {"estimate", m.estimate},
                            {"standard_error", m.standard_error},
                            {"bound", m.bound},
                            {"exact", m.exact ? json(*m.exact) : json(nullptr)},
                            {"holds", m.holds}});
    }
    Result r;
    r.csv = std::move(csv);
    r.report = {{"binomial_tail",
                 {{"cases", bin.cases},
                  {"failures", bin.failures},
                  {"max_exact_over_bound", bin.max_exact_over_bound},
                  {"pass", bin.all_hold()}}},
                {"max_lemma", max_json},
                {"pass", all}};
    r.code = all ? kOk : kCheckFailed;
    return r;
}

double quantile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double w = pos - static_cast<double>(i);
    return sorted[i] + w * (sorted[i + 1] - sorted[i]);
}

Result run_meander_ref(const ExperimentConfig& c) {
    const StreamFactory streams(c.seed, "meander-ref");
    const std::size_t nt = c.t_grid.size();
    std::vector<double> flat(c.samples * nt);
    parallel_chunks(c.samples, 256, c.workers, [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            auto rng = streams.stream(i, StreamRole::auxiliary);
            const auto v = sample_meander_at(c.steps, c.t_grid, rng);
            std::copy(v.begin(), v.end(), flat.begin() + static_cast<std::ptrdiff_t>(i * nt));
        }
    });
    Result r;
    std::string csv = "t,level,quantile\n";
    json marginals = json::array();
    for (std::size_t j = 0; j < nt; ++j) {
        std::vector<double> col(c.samples);
        for (std::uint64_t i = 0; i < c.samples; ++i) {
            col[i] = flat[i * nt + j];
        }
        std::sort(col.begin(), col.end());
        json qs = json::array();
        for (int l = 1; l <= 99; ++l) {
            const double level = l / 100.0;
            const double q = quantile(col, level);
            csv += num(c.t_grid[j]) + ',' + num(level) + ',' + num(q) + '\n';
            qs.push_back(q);
        }
        json entry = {{"t", c.t_grid[j]}, {"quantiles", qs}};
        if (c.t_grid[j] == 1.0) {
            entry["ks_rayleigh"] = ks_json(ks_one_sample(col, rayleigh_cdf));
        }
        marginals.push_back(entry);
    }
    r.csv = std::move(csv);
    r.report = {{"samples", c.samples}, {"steps", c.steps}, {"marginals", marginals}};
    return r;
}

Result dispatch(const ExperimentConfig& c) {
    const auto& e = c.experiment;
    if (e == "simulate") return run_simulate(c);
    if (e == "survival") return run_survival(c);
    if (e == "embedded-survival") return run_embedded_survival(c);
    if (e == "ratio") return run_ratio(c);
    if (e == "yaglom") return run_yaglom(c);
    if (e == "flt-paths") return run_flt_paths(c);
    if (e == "embed-check") return run_embed_check(c);
    if (e == "lemmas") return run_lemmas(c);
    if (e == "meander-ref") return run_meander_ref(c);
    throw ConfigError("experiment", "unknown experiment '" + e + "'");
}

}  // namespace

OffspringLaw parse_offspring_law(const json& j, const std::string& key) {
    require_object(j, key);
    const auto type = string_value(member(j, key, "type"), join(key, "type"));
    if (type == "pmf") {
        allow_keys(j, key, {"type", "weights"});
        auto w = weights(member(j, key, "weights"), join(key, "weights"));
        return wrap(join(key, "weights"), [&] { return OffspringLaw::pmf(std::move(w)); });
    }
    if (type == "degenerate") {
        allow_keys(j, key, {"type", "value"});
        const auto v = unsigned_int(member(j, key, "value"), join(key, "value"));
        return wrap(join(key, "value"), [&] { return OffspringLaw::degenerate(v); });
    }
    if (type == "linear_fractional" || type == "poisson") {
        allow_keys(j, key, {"type", "mean"});
        const double mean = number(member(j, key, "mean"), join(key, "mean"));
        return wrap(join(key, "mean"), [&] {
            return type == "poisson" ? OffspringLaw::poisson(mean)
                                     : OffspringLaw::linear_fractional(mean);
        });
    }
    throw ConfigError(join(key, "type"), "unknown offspring law '" + type + "'");
}

GapLaw parse_gap_law(const json& j, const std::string& key) {
    require_object(j, key);
    const auto type = string_value(member(j, key, "type"), join(key, "type"));
    if (type == "pmf") {
        allow_keys(j, key, {"type", "weights"});
        auto w = weights(member(j, key, "weights"), join(key, "weights"));
        return wrap(join(key, "weights"), [&] { return GapLaw::pmf(std::move(w)); });
    }
    if (type == "constant") {
        allow_keys(j, key, {"type", "value"});
        const auto v = unsigned_int(member(j, key, "value"), join(key, "value"));
        return wrap(join(key, "value"), [&] { return GapLaw::constant(v); });
    }
    if (type == "geometric") {
        allow_keys(j, key, {"type", "mean"});
        const double mean = number(member(j, key, "mean"), join(key, "mean"));
        return wrap(join(key, "mean"), [&] { return GapLaw::geometric(mean); });
    }
    if (type == "zeta") {
        allow_keys(j, key, {"type", "exponent"});
        const double s = number(member(j, key, "exponent"), join(key, "exponent"));
        return wrap(join(key, "exponent"), [&] { return GapLaw::zeta(s); });
    }
    throw ConfigError(join(key, "type"), "unknown gap law '" + type + "'");
}

ModelPtr parse_model(const json& j, const std::string& key) {
    require_object(j, key);
    if (j.contains("builtin")) {
        allow_keys(j, key, {"builtin"});
        const auto name = string_value(j.at("builtin"), join(key, "builtin"));
        return wrap(join(key, "builtin"), [&] { return builtin_model(name); });
    }
    allow_keys(j, key, {"gaps", "nu", "mu"});
    auto gaps = parse_gap_law(member(j, key, "gaps"), join(key, "gaps"));
    auto nu = parse_nu(member(j, key, "nu"), join(key, "nu"));
    auto mu = parse_offspring_law(member(j, key, "mu"), join(key, "mu"));
    return wrap(join(key, "mu"), [&] {
        return std::make_shared<const EnvironmentModel>(std::move(gaps), std::move(nu),
                                                        std::move(mu));
    });
}

ExperimentConfig parse_config(const json& j) {
    require_object(j, "");
    allow_keys(j, "", {"experiment", "model", "parameters", "seed", "workers", "output"});
    ExperimentConfig c;
    if (j.contains("experiment")) {
        c.experiment = string_value(j.at("experiment"), "experiment");
        const auto& names = experiments();
        if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
            throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");
        }
    }
    c.model_echo = j.contains("model") ? j.at("model") : json{{"builtin", "two_point_geometric3"}};
    c.model = parse_model(c.model_echo, "model");
    if (j.contains("seed")) {
        c.seed = unsigned_int(j.at("seed"), "seed");
    }
    if (j.contains("workers")) {
        const auto w = unsigned_int(j.at("workers"), "workers");
        if (w < 1 || w > 4096) {
            throw ConfigError("workers", "must be between 1 and 4096");
        }
        c.workers = static_cast<unsigned>(w);
    } else {
        c.workers = default_workers();
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        require_object(o, "output");
        allow_keys(o, "output", {"path", "format"});
        if (o.contains("path")) {
            c.out_path = string_value(o.at("path"), "output.path");
        }
        if (o.contains("format")) {
            c.format = string_value(o.at("format"), "output.format");
        }
    }
    if (c.format != "csv" && c.format != "json") {
        throw ConfigError("output.format", "must be csv or json");
    }
    if (j.contains("parameters")) {
        const auto& p = j.at("parameters");
        const std::string key = "parameters";
        require_object(p, key);
        allow_keys(p, key,
                   {"n_grid", "k_grid", "t_grid", "replicates", "target_survivors",
                    "max_replicates", "n", "n_max", "replicate", "paths", "steps", "samples",
                    "mc_reps", "binomial_max_n", "assumption_samples", "parent_cap", "scale"});
        auto u = [&](const char* name, std::uint64_t& field, std::uint64_t min_value) {
            if (p.contains(name)) {
                field = unsigned_int(p.at(name), join(key, name));
                if (field < min_value) {
                    throw ConfigError(join(key, name), "must be at least " + std::to_string(min_value));
                }
            }
        };
        if (p.contains("n_grid")) c.n_grid = uint_grid(p.at("n_grid"), "parameters.n_grid");
        if (p.contains("k_grid")) c.k_grid = uint_grid(p.at("k_grid"), "parameters.k_grid");
        if (p.contains("t_grid")) c.t_grid = real_grid(p.at("t_grid"), "parameters.t_grid");
        u("replicates", c.replicates, 1);
        u("target_survivors", c.target_survivors, 1);
        u("max_replicates", c.max_replicates, 1);
        u("n", c.n, 1);
        u("n_max", c.n_max, 0);
        u("replicate", c.replicate, 0);
        u("paths", c.paths, 0);
        u("steps", c.steps, 2);
        u("samples", c.samples, 1);
        u("mc_reps", c.mc_reps, 1);
        u("binomial_max_n", c.binomial_max_n, 1);
        u("assumption_samples", c.assumption_samples, 2);
        u("parent_cap", c.parent_cap, 0);
        if (p.contains("scale")) {
            c.scale = number(p.at("scale"), "parameters.scale");
            if (!(c.scale >= 0.0)) {
                throw ConfigError("parameters.scale", "must be nonnegative");
            }
        }
    }
    return c;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    Result result;
    json metadata;
    try {
        auto rng = StreamFactory(cfg.seed, "assumptions").stream(0, StreamRole::auxiliary);
        const auto report = check_assumptions(*cfg.model, cfg.assumption_samples, rng);
        metadata = {{"tool", "bpsre"},
                    {"version", kVersion},
                    {"boost", BOOST_LIB_VERSION},
                    {"seed", cfg.seed},
                    {"config", config_echo(cfg)},
                    {"assumptions", assumptions_json(report)}};
        result = dispatch(cfg);
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::domain_error& e) {
        err << "invalid parameters: " << e.what() << '\n';
        return kConfigError;
    }

    std::string body;
    if (cfg.format == "json") {
        body = json{{"metadata", metadata}, {"results", result.report}}.dump(2) + '\n';
    } else {
        body = result.csv;
    }
    if (cfg.out_path.empty()) {
        out << body;
    } else {
        std::ofstream file(cfg.out_path, std::ios::binary);
        file << body;
        if (cfg.format == "csv") {
            std::ofstream meta(cfg.out_path + ".meta.json", std::ios::binary);
            meta << json{{"metadata", metadata}, {"results", result.report}}.dump(2) << '\n';
        }
        if (!file) {
            err << "cannot write " << cfg.out_path << '\n';
            return kConfigError;
        }
    }
    if (result.report.contains("error")) {
        err << result.report["error"].get<std::string>() << '\n';
    }
    return result.code;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Branching processes in sparse random environment"};
    std::string experiment;
    std::string config_path;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    std::string out_path;
    std::string format;
    app.add_option("experiment", experiment, "Subcommand")
        ->required()
        ->check(CLI::IsMember(experiments()));
    app.add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "Master seed");
    auto* workers_opt = app.add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 4096u));
    app.add_option("--out", out_path, "Output path (default stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kOk;
        }
        err << e.what() << '\n';
        return kConfigError;
    }

    try {
        json doc = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                throw ConfigError("--config", "cannot open " + config_path);
            }
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("--config", e.what());
            }
        }
        if (doc.is_object()) {
            doc["experiment"] = experiment;
        }
        auto cfg = parse_config(doc);
        if (*seed_opt) {
            cfg.seed = seed;
        }
        if (*workers_opt) {
            cfg.workers = workers;
        }
        if (!out_path.empty()) {
            cfg.out_path = out_path;
        }
        if (!format.empty()) {
            cfg.format = format;
        }
        return run(cfg, out, err);
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace bpsre::cli
