#pragma once
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>
#include <json.hpp>
#include <grpnet/io/csv.hpp>
#include <grpnet/util/exceptions.hpp>

namespace grpnet {
namespace cli {

/**
 * Every setting of a CLI run. Each field has a config key (also the long
 * flag name with '_' replaced by '-') and can come from a key=value or
 * JSON config file; explicit flags take precedence.
 */
struct run_config
{
    std::string subcommand = "fit";
    std::string x;
    std::string y;
    std::string groups = "singleton";          // singleton | <size> | <sizes file>
    std::string family = "gaussian";
    double alpha = 1;
    std::string penalty_factors = "uniform";   // uniform | sqrt | <file>
    std::size_t lambda_count = 100;
    double lambda_ratio = -1;
    std::string lambda_file;
    bool standardize = false;
    bool intercept = true;
    std::string offset_file;
    std::string weights_file;
    std::string mode = "naive";
    std::string multi = "grouped";
    double tol = 1e-7;
    double kkt_slack = 1e-4;
    double irls_eps = 1e-8;
    unsigned long long seed = 1;
    std::string out = "grpnet_out";
    bool check_kkt = false;
    bool profile = false;
    std::size_t n_obs = 100;
    std::size_t n_groups = 50;
    std::size_t n_features = 200;
    double rho = 0;
    double snr = 3;
    std::size_t trials = 3;
    std::string bench_n = "100,1000";
    std::string bench_rho = "0,0.5,0.95";

    bool operator==(const run_config&) const = default;
};

using field_ptr = std::variant<
    std::string run_config::*,
    double run_config::*,
    std::size_t run_config::*,
    unsigned long long run_config::*,
    bool run_config::*>;

struct config_field
{
    std::string key;
    field_ptr ptr;
    std::string help;
};

inline const std::vector<config_field>& config_fields()
{
    static const std::vector<config_field> fields = {
        {"subcommand", &run_config::subcommand, "subcommand to run"},
        {"x", &run_config::x, "feature matrix CSV"},
        {"y", &run_config::y, "response CSV (one column, or one per response)"},
        {"groups", &run_config::groups, "singleton, a uniform group size, or a CSV of group sizes"},
        {"family", &run_config::family, "gaussian, binomial, poisson, multigaussian or multinomial"},
        {"alpha", &run_config::alpha, "elastic net mixing in [0, 1]"},
        {"penalty_factors", &run_config::penalty_factors, "uniform, sqrt (sqrt of group size) or a CSV of factors"},
        {"lambda_count", &run_config::lambda_count, "number of lambdas on the path"},
        {"lambda_ratio", &run_config::lambda_ratio, "smallest lambda over lambda_max (<= 0 picks a default)"},
        {"lambda_file", &run_config::lambda_file, "CSV of decreasing lambdas (overrides count and ratio)"},
        {"standardize", &run_config::standardize, "center and scale the columns of X (and a gaussian y)"},
        {"intercept", &run_config::intercept, "fit an unpenalized intercept"},
        {"offset_file", &run_config::offset_file, "CSV offset for the linear predictor"},
        {"weights_file", &run_config::weights_file, "CSV of observation weights"},
        {"mode", &run_config::mode, "naive or cov"},
        {"multi", &run_config::multi, "grouped or ungrouped (multi-response families)"},
        {"tol", &run_config::tol, "coordinate descent convergence tolerance"},
        {"kkt_slack", &run_config::kkt_slack, "relative slack of the KKT check"},
        {"irls_eps", &run_config::irls_eps, "IRLS convergence tolerance"},
        {"seed", &run_config::seed, "simulation seed"},
        {"out", &run_config::out, "output directory"},
        {"check_kkt", &run_config::check_kkt, "fail unless every lambda passes the KKT check"},
        {"profile", &run_config::profile, "write per-group coefficient norms along the path"},
        {"n_obs", &run_config::n_obs, "simulation: observations"},
        {"n_groups", &run_config::n_groups, "simulate-group: number of groups"},
        {"n_features", &run_config::n_features, "simulate-lasso: number of features"},
        {"rho", &run_config::rho, "simulation: equi-correlation"},
        {"snr", &run_config::snr, "simulation: signal-to-noise ratio"},
        {"trials", &run_config::trials, "bench: repetitions per grid cell"},
        {"bench_n", &run_config::bench_n, "bench: comma-separated observation counts"},
        {"bench_rho", &run_config::bench_rho, "bench: comma-separated correlations"},
    };
    return fields;
}

inline std::string flag_name(const std::string& key)
{
    std::string out = "--" + key;
    for (auto& ch : out) {
        if (ch == '_') ch = '-';
    }
    return out;
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text)
{
    T v{};
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw util::invalid_argument_error("config: invalid value '" + text + "' for " + key + ".");
    }
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw util::invalid_argument_error("config: invalid boolean '" + text + "' for " + key + ".");
}

} // namespace detail

inline const config_field& find_field(const std::string& key)
{
    for (const auto& f : config_fields()) {
        if (f.key == key) return f;
    }
    throw util::invalid_argument_error("config: unknown key '" + key + "'.");
}

/// Sets a field from its textual form.
inline void set_field(run_config& cfg, const config_field& f, const std::string& text)
{
    std::visit([&](auto ptr) {
        using T = std::remove_reference_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, std::string>) cfg.*ptr = text;
        else if constexpr (std::is_same_v<T, bool>) cfg.*ptr = detail::parse_bool(f.key, text);
        else cfg.*ptr = detail::parse_number<T>(f.key, text);
    }, f.ptr);
}

inline std::string get_field(const run_config& cfg, const config_field& f)
{
    return std::visit([&](auto ptr) -> std::string {
        using T = std::remove_cv_t<std::remove_reference_t<decltype(cfg.*ptr)>>;
        if constexpr (std::is_same_v<T, std::string>) return cfg.*ptr;
        else if constexpr (std::is_same_v<T, bool>) return cfg.*ptr ? "true" : "false";
        else if constexpr (std::is_same_v<T, double>) return io::format_number(cfg.*ptr);
        else return std::to_string(cfg.*ptr);
    }, f.ptr);
}

/// key = value lines; '#' starts a comment.
inline std::string to_key_value(const run_config& cfg)
{
    std::string out;
    for (const auto& f : config_fields()) out += f.key + " = " + get_field(cfg, f) + "\n";
    return out;
}

inline nlohmann::ordered_json to_json(const run_config& cfg)
{
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& f : config_fields()) {
        std::visit([&](auto ptr) { j[f.key] = cfg.*ptr; }, f.ptr);
    }
    return j;
}

/// Applies the settings in a config file's text (JSON object or key=value lines).
inline void apply_config_text(run_config& cfg, const std::string& text)
{
    const auto t = detail::trim(text);
    if (!t.empty() && t.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(t);
        } catch (const nlohmann::json::parse_error& e) {
            throw util::parse_error(std::string("config: ") + e.what(), 1, e.byte);
        }
        for (const auto& [key, value] : j.items()) {
            const auto& f = find_field(key);
            std::visit([&](auto ptr) {
                using T = std::remove_reference_t<decltype(cfg.*ptr)>;
                try {
                    cfg.*ptr = value.template get<T>();
                } catch (const nlohmann::json::exception&) {
                    throw util::invalid_argument_error("config: wrong type for " + key + ".");
                }
            }, f.ptr);
        }
        return;
    }
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw util::parse_error("config: expected key = value", lineno, 1);
        set_field(cfg, find_field(detail::trim(line.substr(0, eq))), detail::trim(line.substr(eq + 1)));
    }
}

inline void apply_config_file(run_config& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw util::invalid_argument_error("cannot open config file '" + path + "'.");
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(cfg, ss.str());
}

} // namespace cli
} // namespace grpnet
