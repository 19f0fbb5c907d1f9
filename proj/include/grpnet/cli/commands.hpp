#pragma once
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>
#include <json.hpp>
#include <grpnet/cli/config.hpp>
#include <grpnet/cli/json_out.hpp>
#include <grpnet/io/csv.hpp>
#include <grpnet/io/standardize.hpp>
#include <grpnet/matrix/matrix_dense.hpp>
#include <grpnet/matrix/score.hpp>
#include <grpnet/multi/multi_response.hpp>
#include <grpnet/sim/simulate.hpp>
#include <grpnet/solver/pqn.hpp>

namespace grpnet {
namespace cli {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;
using json = nlohmann::ordered_json;

class kkt_check_failed_error : public util::grpnet_error
{
public:
    explicit kkt_check_failed_error(const std::string& msg)
        : util::grpnet_error("KktCheckFailed", msg) {}
};

inline mat_type load_matrix(const std::string& path, const std::string& what)
{
    if (path.empty()) throw util::invalid_argument_error(what + " file is required.");
    return io::load_csv(path).data;
}

/// All entries of a CSV file in row-major order.
inline std::vector<value_t> load_values(const std::string& path)
{
    const mat_type m = io::load_csv(path).data;
    std::vector<value_t> out;
    out.reserve(static_cast<std::size_t>(m.size()));
    for (index_t i = 0; i < m.rows(); ++i)
        for (index_t j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

inline std::vector<value_t> parse_list(const std::string& text, const std::string& what)
{
    std::vector<value_t> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) out.push_back(detail::parse_number<value_t>(what, item));
    if (out.empty()) throw util::invalid_argument_error(what + " must list at least one value.");
    return out;
}

/// "singleton" (one group per column), a uniform group size, or a CSV of sizes.
inline std::vector<index_t> parse_groups(const std::string& spec, index_t p)
{
    if (spec.empty() || spec == "singleton") return std::vector<index_t>(static_cast<std::size_t>(p), 1);
    if (std::all_of(spec.begin(), spec.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
        const auto k = detail::parse_number<index_t>("groups", spec);
        if (k < 1 || p % k != 0) {
            throw util::invalid_argument_error(
                "groups: uniform size " + spec + " does not divide " + std::to_string(p) + " columns.");
        }
        return std::vector<index_t>(static_cast<std::size_t>(p / k), k);
    }
    std::vector<index_t> out;
    for (const value_t v : load_values(spec)) {
        if (!(v >= 1) || v != std::floor(v)) {
            throw util::invalid_argument_error("groups: sizes must be positive integers.");
        }
        out.push_back(static_cast<index_t>(v));
    }
    return out;
}

/// "uniform" (all ones), "sqrt" (square root of the group size) or a CSV of factors.
inline vec_type parse_penalty_factors(const std::string& spec, const std::vector<index_t>& sizes)
{
    const auto G = static_cast<index_t>(sizes.size());
    if (spec.empty() || spec == "uniform") return vec_type::Ones(G);
    if (spec == "sqrt") {
        vec_type out(G);
        for (index_t g = 0; g < G; ++g) out[g] = std::sqrt(static_cast<value_t>(sizes[g]));
        return out;
    }
    const auto v = load_values(spec);
    return Eigen::Map<const vec_type>(v.data(), static_cast<index_t>(v.size()));
}

inline solver::update_mode parse_mode(const std::string& s)
{
    if (s == "naive") return solver::update_mode::naive;
    if (s == "cov" || s == "covariance") return solver::update_mode::covariance;
    throw util::invalid_argument_error("unknown mode '" + s + "' (expected naive or cov).");
}

inline bool is_multi_family(const std::string& family)
{
    return family == "multigaussian" || family == "multinomial";
}

/// One-hot encodes a column of class labels 0, ..., c-1.
inline mat_type one_hot(const vec_type& labels)
{
    value_t top = 0;
    for (index_t i = 0; i < labels.size(); ++i) {
        const value_t v = labels[i];
        if (!(v >= 0) || v != std::floor(v)) {
            throw util::invalid_argument_error("multinomial: class labels must be nonnegative integers.");
        }
        top = std::max(top, v);
    }
    const auto c = static_cast<index_t>(top) + 1;
    if (c < 2) throw util::invalid_argument_error("multinomial: at least two classes are required.");
    mat_type out = mat_type::Zero(labels.size(), c);
    for (index_t i = 0; i < labels.size(); ++i) out(i, static_cast<index_t>(labels[i])) = 1;
    return out;
}

/**
 * Flattened problem used to evaluate objectives and certify KKT conditions
 * from emitted coefficients: eta = X beta + beta0 + offset.
 */
struct flat_problem
{
    std::shared_ptr<const matrix::matrix_naive_base> X;
    std::vector<index_t> starts;
    std::vector<index_t> sizes;
    solver::penalty_config pc;
    vec_type offset;
    std::function<value_t(const vec_type&)> loss;
    std::function<vec_type(const vec_type&)> neg_gradient;
    std::size_t n_threads = 1;

    vec_type eta(const vec_type& beta, value_t beta0) const
    {
        vec_type out(X->rows());
        X->mul(beta, out);
        out.array() += beta0;
        if (offset.size()) out += offset;
        return out;
    }

    value_t penalty(const vec_type& beta) const
    {
        value_t out = 0;
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            const value_t nrm = beta.segment(starts[g], sizes[g]).norm();
            out += pc.omega[g] * (pc.alpha * nrm + 0.5 * (1 - pc.alpha) * nrm * nrm);
        }
        return out;
    }

    value_t objective(const vec_type& beta, value_t beta0, value_t lam) const
    {
        return loss(eta(beta, beta0)) + lam * penalty(beta);
    }

    /**
     * Largest ||X_g^T grad||_2 / (alpha omega_g) over penalized groups
     * outside the screen set, and over all penalized groups with beta_g = 0.
     */
    std::pair<value_t, value_t> kkt_residuals(const vec_type& beta, value_t beta0, const std::vector<index_t>& screen) const
    {
        const vec_type r = neg_gradient(eta(beta, beta0));
        const vec_type scores = matrix::score_all_groups(*X, starts, sizes, vec_type::Ones(r.size()), r, n_threads);
        std::vector<char> screened(sizes.size(), 0);
        for (const auto g : screen) screened[static_cast<std::size_t>(g)] = 1;
        value_t unscreened = 0, zero = 0;
        for (std::size_t g = 0; g < sizes.size(); ++g) {
            const auto gi = static_cast<index_t>(g);
            if (pc.unpenalized(gi)) continue;
            const value_t score = scores[gi] / (pc.alpha * pc.omega[gi]);
            if (!screened[g]) unscreened = std::max(unscreened, score);
            if (beta.segment(starts[g], sizes[g]).squaredNorm() == 0) zero = std::max(zero, score);
        }
        return {unscreened, zero};
    }
};

inline flat_problem gaussian_flat(const solver::grouped_design& d, const solver::penalty_config& pc)
{
    flat_problem f;
    f.X = d.X;
    f.starts = d.group_starts;
    f.sizes = d.group_sizes;
    f.pc = pc;
    const vec_type y = d.y, w = d.weights;
    f.loss = [y, w](const vec_type& eta) { return 0.5 * w.dot((y - eta).cwiseAbs2()); };
    f.neg_gradient = [y, w](const vec_type& eta) -> vec_type { return w.cwiseProduct(y - eta); };
    return f;
}

inline flat_problem family_flat(
    std::shared_ptr<const matrix::matrix_naive_base> X,
    const std::vector<index_t>& sizes,
    const solver::penalty_config& pc,
    std::shared_ptr<const glm::glm_base> fam,
    vec_type offset
)
{
    flat_problem f;
    f.X = std::move(X);
    f.starts = solver::starts_from_sizes(sizes);
    f.sizes = sizes;
    f.pc = pc;
    f.offset = std::move(offset);
    f.loss = [fam](const vec_type& eta) { return fam->loss(eta); };
    f.neg_gradient = [fam](const vec_type& eta) -> vec_type { return -fam->gradient(eta); };
    return f;
}

/// Path reported on the original scale of the inputs.
struct fit_result
{
    std::string family;
    index_t n = 0;
    index_t p = 0;
    index_t c = 1;
    bool multi = false;
    std::vector<index_t> coef_group;        // group label of coefficient (j, k) at j * c + k
    index_t n_groups = 0;
    value_t lambda_max = 0;
    std::vector<value_t> lambdas;
    std::vector<mat_type> coefs;            // p x c
    std::vector<vec_type> intercepts;       // c
    std::vector<value_t> objectives;
    std::vector<value_t> kkt_residuals;             // groups outside the screen set
    std::vector<value_t> zero_group_residuals;      // every group with beta_g = 0
    std::vector<solver::path_diagnostics> diagnostics;
};

struct fit_timings
{
    double load_seconds = 0;
    double fit_seconds = 0;
    double write_seconds = 0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace detail

/**
 * Loads the inputs named in cfg, optionally standardizes, fits the path for
 * the configured family and maps coefficients back to the original scale.
 * Objectives and KKT residuals are evaluated on the fitting scale.
 */
inline fit_result run_fit(const run_config& cfg, fit_timings* timings = nullptr)
{
    auto t0 = std::chrono::steady_clock::now();
    mat_type X = load_matrix(cfg.x, "feature matrix (--x)");
    mat_type Y = load_matrix(cfg.y, "response (--y)");
    const index_t n = X.rows(), p = X.cols();
    if (Y.rows() != n) {
        throw util::dimension_mismatch_error(
            "response has " + std::to_string(Y.rows()) + " rows, expected " + std::to_string(n) + ".");
    }
    if (cfg.family == "multinomial" && Y.cols() == 1) Y = one_hot(Y.col(0));
    const index_t c = Y.cols();
    const bool multi = is_multi_family(cfg.family);
    if (!multi && c != 1) {
        throw util::dimension_mismatch_error(cfg.family + ": expected a single response column, got "
            + std::to_string(c) + ".");
    }

    vec_type w = vec_type::Constant(n, 1.0 / n);
    if (!cfg.weights_file.empty()) {
        const auto v = load_values(cfg.weights_file);
        if (static_cast<index_t>(v.size()) != n) {
            throw util::dimension_mismatch_error("weights file must hold one value per row.");
        }
        w = solver::normalize_weights(Eigen::Map<const vec_type>(v.data(), n));
    }
    mat_type offset = mat_type::Zero(n, c);
    const bool has_offset = !cfg.offset_file.empty();
    if (has_offset) {
        offset = load_matrix(cfg.offset_file, "offset");
        if (offset.rows() != n || offset.cols() != c) {
            throw util::dimension_mismatch_error("offset must be " + std::to_string(n) + " x "
                + std::to_string(c) + ".");
        }
    }
    std::vector<value_t> lambdas;
    if (!cfg.lambda_file.empty()) lambdas = load_values(cfg.lambda_file);
    if (timings) timings->load_seconds = detail::seconds_since(t0);
    t0 = std::chrono::steady_clock::now();

    // the Gaussian family absorbs the offset into the response
    const bool shift_response = cfg.family == "gaussian" || cfg.family == "multigaussian";
    if (shift_response) Y -= offset;

    io::standardization st;
    st.x_center = vec_type::Zero(p);
    st.x_scale = vec_type::Ones(p);
    if (cfg.standardize) {
        vec_type y0 = Y.col(0);
        st = io::standardize(X, cfg.family == "gaussian" ? &y0 : nullptr, w, true, cfg.intercept);
        if (cfg.family == "gaussian") Y.col(0) = y0;
    }

    solver::solver_options opts;
    opts.mode = parse_mode(cfg.mode);
    opts.tol = cfg.tol;
    opts.kkt_slack = cfg.kkt_slack;
    opts.intercept = cfg.intercept;

    solver::glm_config gcfg;
    gcfg.intercept = cfg.intercept;
    gcfg.irls_eps = cfg.irls_eps;

    const auto Xp = std::make_shared<matrix::matrix_dense>(X);

    fit_result out;
    out.family = cfg.family;
    out.n = n;
    out.p = p;
    out.c = c;
    out.multi = multi;

    solver::path_result path;
    flat_problem flat;
    if (!multi) {
        const auto sizes = parse_groups(cfg.groups, p);
        solver::penalty_config pc;
        pc.alpha = cfg.alpha;
        pc.omega = parse_penalty_factors(cfg.penalty_factors, sizes);
        pc.lambdas = lambdas;
        pc.lambda_count = cfg.lambda_count;
        pc.lambda_ratio = cfg.lambda_ratio;
        if (cfg.family == "gaussian") {
            const auto d = solver::make_design(Xp, sizes, Y.col(0), w);
            path = solver::fit_path(d, pc, opts);
            flat = gaussian_flat(d, pc);
        } else {
            const auto fam = glm::make_family(cfg.family, Y, w);
            if (has_offset) gcfg.offset = offset.col(0);
            path = solver::fit_glm_path(solver::make_glm_problem(Xp, sizes, fam), pc, gcfg, opts);
            flat = family_flat(Xp, sizes, pc, fam, gcfg.offset);
        }
        out.n_groups = static_cast<index_t>(sizes.size());
        for (std::size_t g = 0; g < sizes.size(); ++g)
            for (index_t k = 0; k < sizes[g]; ++k) out.coef_group.push_back(static_cast<index_t>(g));
    } else {
        if (!cfg.groups.empty() && cfg.groups != "singleton") {
            throw util::invalid_argument_error("multi-response families group by feature rows; --groups must be singleton.");
        }
        multi::multi_penalty_spec spec;
        spec.mode = multi::parse_multi_mode(cfg.multi);
        spec.alpha = cfg.alpha;
        spec.lambdas = lambdas;
        spec.lambda_count = cfg.lambda_count;
        spec.lambda_ratio = cfg.lambda_ratio;
        const bool grouped = spec.mode == multi::multi_mode::grouped;
        const std::vector<index_t> pen_sizes(static_cast<std::size_t>(grouped ? p : p * c), grouped ? c : 1);
        if (cfg.penalty_factors != "uniform") spec.omega = parse_penalty_factors(cfg.penalty_factors, pen_sizes);
        if (has_offset && cfg.family == "multinomial") gcfg.offset = glm::flatten_rows(offset);

        const auto res = multi::fit_multi_path(Xp, Y, w, spec, cfg.family, cfg.intercept, opts, gcfg);
        path = res.flat;
        const auto md = multi::build_multi_design(Xp, Y, w, spec, cfg.intercept);
        const auto pc = multi::multi_penalty_config(md, spec);
        if (cfg.family == "multigaussian") {
            flat = gaussian_flat(solver::make_design(md.X, md.group_sizes, md.y, md.weights), pc);
        } else {
            vec_type wr(n);
            for (index_t i = 0; i < n; ++i) wr[i] = md.weights[i * c];
            flat = family_flat(md.X, md.group_sizes, pc, std::make_shared<glm::glm_multinomial>(Y, wr), gcfg.offset);
        }
        out.n_groups = static_cast<index_t>(pen_sizes.size());
        for (index_t j = 0; j < p; ++j)
            for (index_t k = 0; k < c; ++k) out.coef_group.push_back(grouped ? j : j * c + k);
        for (std::size_t k = 0; k < res.coefs.size(); ++k) {
            const mat_type B = st.x_scale.cwiseInverse().asDiagonal() * res.coefs[k];
            out.coefs.push_back(B);
            out.intercepts.push_back(res.intercepts[k] - B.transpose() * st.x_center);
        }
    }
    flat.n_threads = opts.n_threads;

    out.lambda_max = path.lambda_max;
    out.lambdas = path.lambdas;
    out.diagnostics = path.diagnostics;
    for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
        const vec_type beta = path.betas[k];
        const value_t b0 = multi ? 0 : path.intercepts[k];
        out.objectives.push_back(flat.objective(beta, b0, path.lambdas[k]));
        const auto [unscreened, zero] = flat.kkt_residuals(beta, b0, path.screen_sets[k]);
        out.kkt_residuals.push_back(unscreened);
        out.zero_group_residuals.push_back(zero);
        if (!multi) {
            out.coefs.push_back(st.coef_to_original(beta));
            out.intercepts.push_back(vec_type::Constant(1, st.intercept_to_original(beta, b0)));
        }
    }
    if (timings) timings->fit_seconds = detail::seconds_since(t0);
    return out;
}

inline bool kkt_ok(const std::vector<value_t>& lambdas, const std::vector<value_t>& residuals, value_t slack)
{
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(residuals[k] <= lambdas[k] * (1 + slack))) return false;
    }
    return true;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw util::invalid_argument_error("cannot write '" + path.string() + "'.");
    os << text;
}

/// Long format: lambda, group, column, response, value. Intercepts use group "intercept".
inline std::string coefficients_csv(const fit_result& r, bool intercept)
{
    std::string out = "lambda,group,column,response,value\n";
    for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
        const std::string lam = io::format_number(r.lambdas[k]);
        if (intercept) {
            for (index_t m = 0; m < r.c; ++m) {
                out += lam + ",intercept,intercept," + std::to_string(m) + "," + io::format_number(r.intercepts[k][m]) + "\n";
            }
        }
        for (index_t j = 0; j < r.p; ++j) {
            for (index_t m = 0; m < r.c; ++m) {
                const value_t v = r.coefs[k](j, m);
                if (v == 0) continue;
                out += lam + "," + std::to_string(r.coef_group[j * r.c + m]) + "," + std::to_string(j) + ","
                    + std::to_string(m) + "," + io::format_number(v) + "\n";
            }
        }
    }
    return out;
}

/// Per-group coefficient norms along the path: lambda, log_lambda, group, norm.
inline mat_type profile_table(const fit_result& r)
{
    mat_type out(static_cast<index_t>(r.lambdas.size()) * r.n_groups, 4);
    index_t row = 0;
    for (std::size_t k = 0; k < r.lambdas.size(); ++k) {
        vec_type sq = vec_type::Zero(r.n_groups);
        for (index_t j = 0; j < r.p; ++j)
            for (index_t m = 0; m < r.c; ++m) sq[r.coef_group[j * r.c + m]] += r.coefs[k](j, m) * r.coefs[k](j, m);
        for (index_t g = 0; g < r.n_groups; ++g, ++row) {
            out.row(row) << r.lambdas[k], std::log(r.lambdas[k]), static_cast<value_t>(g), std::sqrt(sq[g]);
        }
    }
    return out;
}

inline json summary_json(const fit_result& r, const run_config& cfg)
{
    json j;
    j["family"] = r.family;
    j["n"] = r.n;
    j["p"] = r.p;
    j["responses"] = r.c;
    j["groups"] = r.n_groups;
    j["lambda_max"] = r.lambda_max;
    j["lambdas"] = r.lambdas;
    json intercepts = json::array();
    for (const auto& b0 : r.intercepts) {
        if (r.multi) intercepts.push_back(std::vector<value_t>(b0.data(), b0.data() + b0.size()));
        else intercepts.push_back(b0[0]);
    }
    j["intercepts"] = intercepts;
    j["objectives"] = r.objectives;
    j["kkt_max_residual"] = r.kkt_residuals;
    j["kkt_ok"] = kkt_ok(r.lambdas, r.kkt_residuals, cfg.kkt_slack);
    j["zero_group_residual"] = r.zero_group_residuals;
    std::vector<std::size_t> cycles, irls, rounds, active;
    for (const auto& d : r.diagnostics) {
        cycles.push_back(d.cycles);
        irls.push_back(d.irls_iters);
        rounds.push_back(d.kkt_rounds);
        active.push_back(d.active_size);
    }
    j["cycles"] = cycles;
    j["irls_iterations"] = irls;
    j["kkt_rounds"] = rounds;
    j["active_groups"] = active;
    j["config"] = to_json(cfg);
    return j;
}

/**
 * fit: writes coefficients.csv, summary.json, timings.json and (with
 * profile) profile.csv into cfg.out. With check_kkt, throws after writing
 * when some lambda fails the KKT check.
 */
inline void fit_command(const run_config& cfg)
{
    fit_timings t;
    const auto r = run_fit(cfg, &t);
    const auto t0 = std::chrono::steady_clock::now();
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    write_text(dir / "coefficients.csv", coefficients_csv(r, cfg.intercept));
    write_text(dir / "summary.json", json_string(summary_json(r, cfg)));
    if (cfg.profile) io::save_csv((dir / "profile.csv").string(), {"lambda", "log_lambda", "group", "norm"}, profile_table(r));
    t.write_seconds = detail::seconds_since(t0);
    json tj;
    tj["load_seconds"] = t.load_seconds;
    tj["fit_seconds"] = t.fit_seconds;
    tj["write_seconds"] = t.write_seconds;
    write_text(dir / "timings.json", json_string(tj));
    if (cfg.check_kkt && !kkt_ok(r.lambdas, r.kkt_residuals, cfg.kkt_slack)) {
        throw kkt_check_failed_error("KKT residual exceeds lambda (1 + " + io::format_number(cfg.kkt_slack)
            + ") on the fitted path.");
    }
}

/// check-kkt: re-reads summary.json in cfg.out and certifies every lambda.
inline void check_kkt_command(const run_config& cfg, std::ostream& os = std::cout)
{
    const auto path = std::filesystem::path(cfg.out) / "summary.json";
    std::ifstream in(path);
    if (!in) throw util::invalid_argument_error("cannot open '" + path.string() + "'.");
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw util::parse_error(std::string("summary.json: ") + e.what(), 1, e.byte);
    }
    const auto lambdas = j.at("lambdas").get<std::vector<value_t>>();
    const auto residuals = j.at("kkt_max_residual").get<std::vector<value_t>>();
    if (lambdas.size() != residuals.size()) throw util::dimension_mismatch_error("summary.json: length mismatch.");
    std::size_t bad = 0;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (residuals[k] <= lambdas[k] * (1 + cfg.kkt_slack)) continue;
        ++bad;
        os << "violation at lambda " << io::format_number(lambdas[k]) << ": residual "
           << io::format_number(residuals[k]) << "\n";
    }
    os << (lambdas.size() - bad) << "/" << lambdas.size() << " lambdas pass the KKT check\n";
    if (bad) throw kkt_check_failed_error(std::to_string(bad) + " lambdas fail the KKT check.");
}

inline std::vector<std::string> numbered(const std::string& prefix, index_t count)
{
    std::vector<std::string> out;
    for (index_t j = 0; j < count; ++j) out.push_back(prefix + std::to_string(j));
    return out;
}

inline void write_simulation(const sim::simulated_data& d, const run_config& cfg, const std::string& design)
{
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    io::save_csv((dir / "X.csv").string(), numbered("x", d.X.cols()), d.X);
    io::save_csv((dir / "y_gaussian.csv").string(), {"y"}, d.y_gaussian);
    io::save_csv((dir / "y_binomial.csv").string(), {"y"}, d.y_binomial);
    io::save_csv((dir / "beta.csv").string(), {"beta"}, d.beta);
    vec_type sizes(static_cast<index_t>(d.group_sizes.size()));
    for (std::size_t g = 0; g < d.group_sizes.size(); ++g) sizes[static_cast<index_t>(g)] = static_cast<value_t>(d.group_sizes[g]);
    io::save_csv((dir / "groups.csv").string(), {"size"}, sizes);
    json j;
    j["design"] = design;
    j["n"] = d.X.rows();
    j["p"] = d.X.cols();
    j["rho"] = cfg.rho;
    j["snr"] = cfg.snr;
    j["seed"] = cfg.seed;
    j["sigma"] = d.sigma;
    j["generator"] = "mt19937_64";
    j["normal"] = "marsaglia polar";
    write_text(dir / "simulation.json", json_string(j));
}

inline void simulate_group_command(const run_config& cfg)
{
    write_simulation(sim::simulate_group(static_cast<index_t>(cfg.n_obs), static_cast<index_t>(cfg.n_groups),
                                         cfg.rho, cfg.snr, cfg.seed), cfg, "group");
}

inline void simulate_lasso_command(const run_config& cfg)
{
    write_simulation(sim::simulate_lasso(static_cast<index_t>(cfg.n_obs), static_cast<index_t>(cfg.n_features),
                                         cfg.rho, cfg.snr, cfg.seed), cfg, "lasso");
}

/**
 * bench: Gaussian group-lasso paths on simulated group designs over the
 * (n, rho) grid, cfg.trials fits per cell. Writes bench.csv (mean and
 * min seconds per cell, mean relative to the fastest cell),
 * bench_trials.csv (every timing) and bench.json. Timings are
 * self-relative: no other package is involved.
 */
inline void bench_command(const run_config& cfg, std::ostream& os = std::cout)
{
    if (cfg.trials < 1) throw util::invalid_argument_error("bench: trials must be >= 1.");
    const auto ns = parse_list(cfg.bench_n, "bench_n");
    const auto rhos = parse_list(cfg.bench_rho, "bench_rho");
    const auto G = static_cast<index_t>(cfg.n_groups);

    std::vector<std::vector<value_t>> cells;
    mat_type trials(static_cast<index_t>(ns.size() * rhos.size() * cfg.trials), 4);
    index_t row = 0;
    for (const value_t nv : ns) {
        for (const value_t rho : rhos) {
            const auto data = sim::simulate_group(static_cast<index_t>(nv), G, rho, cfg.snr, cfg.seed);
            mat_type X = data.X;
            vec_type y = data.y_gaussian;
            io::standardize(X, &y, vec_type::Constant(X.rows(), 1.0 / X.rows()));
            const auto d = solver::make_design(std::make_shared<matrix::matrix_dense>(std::move(X)), data.group_sizes, y);
            auto pc = solver::make_penalty(d.G(), cfg.alpha);
            if (cfg.penalty_factors != "uniform") pc.omega = parse_penalty_factors(cfg.penalty_factors, data.group_sizes);
            pc.lambda_count = cfg.lambda_count;
            pc.lambda_ratio = cfg.lambda_ratio > 0 ? cfg.lambda_ratio : 0.01;
            solver::solver_options opts;
            opts.mode = parse_mode(cfg.mode);
            opts.tol = cfg.tol;
            opts.intercept = cfg.intercept;
            value_t sum = 0, best = std::numeric_limits<value_t>::infinity();
            for (std::size_t t = 0; t < cfg.trials; ++t) {
                const auto t0 = std::chrono::steady_clock::now();
                solver::fit_path(d, pc, opts);
                const value_t s = detail::seconds_since(t0);
                sum += s;
                best = std::min(best, s);
                trials.row(row++) << nv, rho, static_cast<value_t>(t), s;
            }
            cells.push_back({nv, static_cast<value_t>(data.X.cols()), rho, static_cast<value_t>(cfg.trials),
                             sum / static_cast<value_t>(cfg.trials), best});
            os << "n=" << nv << " rho=" << rho << " mean " << io::format_number(cells.back()[4]) << " s\n";
        }
    }
    value_t fastest = std::numeric_limits<value_t>::infinity();
    for (const auto& c : cells) fastest = std::min(fastest, c[4]);
    mat_type table(static_cast<index_t>(cells.size()), 7);
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const auto r = static_cast<index_t>(k);
        for (index_t m = 0; m < 6; ++m) table(r, m) = cells[k][static_cast<std::size_t>(m)];
        table(r, 6) = fastest > 0 ? cells[k][4] / fastest : 1;
    }
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    io::save_csv((dir / "bench.csv").string(),
                 {"n", "p", "rho", "trials", "mean_seconds", "min_seconds", "relative_mean"}, table);
    io::save_csv((dir / "bench_trials.csv").string(), {"n", "rho", "trial", "seconds"}, trials);
    json j;
    j["comparison"] = "self-relative";
    j["design"] = "group";
    j["groups"] = G;
    j["lambda_count"] = cfg.lambda_count;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    write_text(dir / "bench.json", json_string(j));
}

/// Machine-readable error record.
inline json error_record(const std::string& kind, const std::string& message)
{
    json j;
    j["error"]["kind"] = kind;
    j["error"]["message"] = message;
    return j;
}

/// Runs cfg.subcommand; returns the process exit status (0 on success).
inline int run_command(const run_config& cfg, std::ostream& err = std::cerr)
{
    std::string kind, message;
    try {
        if (cfg.subcommand == "fit") fit_command(cfg);
        else if (cfg.subcommand == "simulate-group") simulate_group_command(cfg);
        else if (cfg.subcommand == "simulate-lasso") simulate_lasso_command(cfg);
        else if (cfg.subcommand == "bench") bench_command(cfg);
        else if (cfg.subcommand == "check-kkt") check_kkt_command(cfg);
        else throw util::invalid_argument_error("unknown subcommand '" + cfg.subcommand + "'.");
        std::error_code ec;
        std::filesystem::remove(std::filesystem::path(cfg.out) / "error.json", ec);
        return 0;
    } catch (const util::grpnet_error& e) {
        kind = e.kind();
        message = e.what();
    } catch (const std::filesystem::filesystem_error& e) {
        kind = "IoError";
        message = e.what();
    }
    const auto record = json_string(error_record(kind, message));
    err << record;
    std::error_code ec;
    if (std::filesystem::is_directory(cfg.out, ec)) {
        std::ofstream(std::filesystem::path(cfg.out) / "error.json", std::ios::binary) << record;
    }
    return 1;
}

} // namespace cli
} // namespace grpnet
