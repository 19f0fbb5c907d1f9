#pragma once
#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>
#include <grpnet/bcd/kernel.hpp>
#include <grpnet/linalg/jacobi.hpp>
#include <grpnet/matrix/matrix_centered.hpp>
#include <grpnet/matrix/score.hpp>
#include <grpnet/solver/design.hpp>
#include <grpnet/util/threads.hpp>

namespace grpnet {
namespace solver {

enum class update_mode { naive, covariance };

/**
 * Called after every block update that changed coefficients, with the group
 * index, the change in beta_g (original basis) and the eigenbasis
 * convergence contribution.
 */
using update_observer = std::function<void(index_t g, const vec_type& delta, value_t measure)>;

struct solver_options
{
    update_mode mode = update_mode::naive;
    value_t tol = 1e-7;                 // max_g p_g^{-1} ||X_g dbeta_g||_W^2 threshold
    std::size_t max_cycles = 10000;
    value_t kernel_tol = bcd::default_kernel_tol;
    std::size_t kernel_max_iters = bcd::default_kernel_max_iters;
    value_t kkt_slack = 1e-4;
    std::size_t max_kkt_rounds = 100;
    std::size_t cov_memory_cap = std::size_t(1) << 27;   // doubles held by covariance blocks
    bool intercept = false;
    std::size_t n_threads = util::env_threads();
    update_observer observer;
};

/// Lazily computed eigendecompositions of X_g^T W X_g, at most once per group.
class gram_eigen_cache
{
    std::vector<std::optional<linalg::eigen_result>> _entries;
    std::size_t _computed = 0;

public:
    explicit gram_eigen_cache(index_t G = 0) : _entries(G) {}

    const linalg::eigen_result& get(const grouped_design& d, index_t g)
    {
        if (static_cast<index_t>(_entries.size()) != d.G()) _entries.assign(d.G(), std::nullopt);
        auto& e = _entries[g];
        if (!e) {
            const index_t q = d.group_sizes[g];
            mat_type gram(q, q);
            d.X->gram_block(d.group_starts[g], q, d.weights, gram);
            e = linalg::gram_eigen(gram);
            ++_computed;
        }
        return *e;
    }

    bool has(index_t g) const { return g < static_cast<index_t>(_entries.size()) && _entries[g].has_value(); }
    std::size_t n_computed() const { return _computed; }
    void clear() { for (auto& e : _entries) e.reset(); }
};

/**
 * Mutable solver state. In naive mode resid tracks y - X beta - beta0; in
 * covariance mode grad tracks X^T W (y - X beta). Groups outside the screen
 * set always have zero coefficients.
 */
struct gaussian_state
{
    update_mode mode = update_mode::naive;
    vec_type beta;
    value_t beta0 = 0;
    bool explicit_intercept = false;
    vec_type resid;
    vec_type grad;
    std::vector<index_t> screen_set;
    std::vector<char> in_screen;
    std::vector<index_t> active_set;
    std::size_t n_active_coeffs = 0;
    std::vector<mat_type> cov_blocks;       // X^T W X_g for screened groups (covariance mode)
    std::size_t cov_doubles = 0;
    std::size_t cycles = 0;
};

inline void recompute_state(gaussian_state& s, const grouped_design& d)
{
    if (s.mode == update_mode::naive) {
        s.resid.resize(d.n());
        d.X->mul(s.beta, s.resid);
        s.resid = d.y - s.resid;
        s.resid.array() -= s.beta0;
    } else {
        vec_type r(d.n());
        d.X->mul(s.beta, r);
        r = d.y - r;
        s.grad.resize(d.p());
        d.X->bmul(0, d.p(), d.weights, r, s.grad);
    }
}

inline void add_to_screen(gaussian_state& s, const grouped_design& d, index_t g, const solver_options& opts)
{
    if (s.in_screen[g]) return;
    s.in_screen[g] = 1;
    s.screen_set.push_back(g);
    if (s.mode == update_mode::covariance) {
        const std::size_t need = static_cast<std::size_t>(d.p()) * d.group_sizes[g];
        if (s.cov_doubles + need > opts.cov_memory_cap) {
            throw util::memory_budget_exceeded_error(
                "covariance mode needs " + std::to_string(s.cov_doubles + need)
                + " doubles for X^T W X_g blocks, cap is " + std::to_string(opts.cov_memory_cap) + ".");
        }
        s.cov_blocks[g].resize(d.p(), d.group_sizes[g]);
        d.X->cov_block(d.group_starts[g], d.group_sizes[g], d.weights, s.cov_blocks[g]);
        s.cov_doubles += need;
    }
}

inline gaussian_state make_state(
    const grouped_design& d,
    const solver_options& opts,
    bool explicit_intercept = false,
    const vec_type& beta = vec_type(),
    value_t beta0 = 0
)
{
    if (explicit_intercept && opts.mode == update_mode::covariance) {
        throw util::invalid_argument_error("explicit intercept coordinate requires naive mode.");
    }
    gaussian_state s;
    s.mode = opts.mode;
    s.beta = beta.size() ? beta : vec_type::Zero(d.p());
    if (s.beta.size() != d.p()) throw util::dimension_mismatch_error("make_state: beta length must equal cols.");
    s.beta0 = beta0;
    s.explicit_intercept = explicit_intercept;
    s.in_screen.assign(d.G(), 0);
    if (s.mode == update_mode::covariance) s.cov_blocks.resize(d.G());
    recompute_state(s, d);
    for (index_t g = 0; g < d.G(); ++g) {
        if (s.beta.segment(d.group_starts[g], d.group_sizes[g]).squaredNorm() > 0) {
            add_to_screen(s, d, g, opts);
        }
    }
    return s;
}

/**
 * Exact block update of group g at lam. Returns the convergence contribution
 * p_g^{-1} ||Q_g^T dbeta_g||_{Lambda_g}^2 = p_g^{-1} ||X_g dbeta_g||_W^2.
 */
inline value_t bcd_group_update(
    gaussian_state& s,
    const grouped_design& d,
    const penalty_config& pc,
    gram_eigen_cache& cache,
    index_t g,
    value_t lam,
    const solver_options& opts
)
{
    const index_t j = d.group_starts[g];
    const index_t q = d.group_sizes[g];
    const auto& eig = cache.get(d, g);
    const auto& Q = eig.Q;
    const auto& L = eig.lambda;

    vec_type gamma(q);
    if (s.mode == update_mode::naive) {
        d.X->bmul(j, q, d.weights, s.resid, gamma);
    } else {
        gamma = s.grad.segment(j, q);
    }

    auto beta_g = s.beta.segment(j, q);
    const vec_type x_old = Q.transpose() * beta_g;
    const vec_type v = Q.transpose() * gamma + L.cwiseProduct(x_old);
    const value_t l1 = lam * pc.omega[g] * pc.alpha;
    const value_t l2 = lam * pc.omega[g] * (1 - pc.alpha);
    const vec_type sigma = L.array() + l2;

    vec_type x_new(q);
    if (q == 1) {
        x_new[0] = sigma[0] > 0 ? bcd::soft_threshold(sigma[0], v[0], l1) : 0;
    } else if (l1 > 0) {
        const auto prob = bcd::diag_quad_problem::make(sigma, v, l1);
        x_new = bcd::solve_bcd(prob, opts.kernel_tol, opts.kernel_max_iters).x;
    } else {
        const value_t cutoff = bcd::default_sigma_tol * sigma.maxCoeff();
        for (index_t i = 0; i < q; ++i) x_new[i] = sigma[i] > cutoff ? v[i] / sigma[i] : 0;
    }

    const vec_type dx = x_new - x_old;
    if ((dx.array() == 0).all()) return 0;

    const vec_type dbeta = Q * dx;
    beta_g += dbeta;
    if (s.mode == update_mode::naive) {
        d.X->btmul(j, q, -dbeta, s.resid);
    } else {
        s.grad.noalias() -= s.cov_blocks[g] * dbeta;
    }
    const value_t measure = L.dot(dx.cwiseProduct(dx)) / q;
    if (opts.observer) opts.observer(g, dbeta, measure);
    return measure;
}

/// Exact update of the explicit unpenalized intercept (naive mode, weights sum to 1).
inline value_t intercept_update(gaussian_state& s, const grouped_design& d)
{
    const value_t delta = d.weights.dot(s.resid);
    if (delta == 0) return 0;
    s.beta0 += delta;
    s.resid.array() -= delta;
    return delta * delta;
}

/// One pass over groups; returns the largest convergence contribution.
inline value_t cycle(
    gaussian_state& s,
    const grouped_design& d,
    const penalty_config& pc,
    gram_eigen_cache& cache,
    const std::vector<index_t>& groups,
    value_t lam,
    const solver_options& opts
)
{
    value_t measure = 0;
    if (s.explicit_intercept) measure = intercept_update(s, d);
    for (const auto g : groups) {
        measure = std::max(measure, bcd_group_update(s, d, pc, cache, g, lam, opts));
    }
    ++s.cycles;
    return measure;
}

inline void refresh_active(gaussian_state& s, const grouped_design& d)
{
    s.active_set.clear();
    s.n_active_coeffs = 0;
    for (const auto g : s.screen_set) {
        if (s.beta.segment(d.group_starts[g], d.group_sizes[g]).squaredNorm() > 0) {
            s.active_set.push_back(g);
            s.n_active_coeffs += d.group_sizes[g];
        }
    }
}

/**
 * Solves at lam over the screen set with the active-set strategy.
 * Returns the number of cycles performed.
 */
inline std::size_t fit_single_lambda(
    gaussian_state& s,
    const grouped_design& d,
    const penalty_config& pc,
    gram_eigen_cache& cache,
    value_t lam,
    const solver_options& opts
)
{
    std::size_t cycles = 0;
    const auto bump = [&]() {
        if (++cycles > opts.max_cycles) {
            throw util::iteration_limit_error(
                "fit_single_lambda: no convergence after " + std::to_string(opts.max_cycles)
                + " cycles at lambda = " + std::to_string(lam) + ".");
        }
    };
    if (s.screen_set.empty() && !s.explicit_intercept) {
        refresh_active(s, d);
        return 0;
    }
    while (true) {
        bump();
        const value_t m = cycle(s, d, pc, cache, s.screen_set, lam, opts);
        refresh_active(s, d);
        if (m <= opts.tol) break;
        while (true) {
            bump();
            if (cycle(s, d, pc, cache, s.active_set, lam, opts) <= opts.tol) break;
        }
    }
    return cycles;
}

/// Raw per-group gradient norms ||X_g^T W (y - X beta - beta0)||_2.
inline vec_type group_scores(const gaussian_state& s, const grouped_design& d, const solver_options& opts)
{
    if (s.mode == update_mode::naive) {
        return matrix::score_all_groups(*d.X, d.group_starts, d.group_sizes, d.weights, s.resid, opts.n_threads);
    }
    vec_type out(d.G());
    for (index_t g = 0; g < d.G(); ++g) {
        out[g] = s.grad.segment(d.group_starts[g], d.group_sizes[g]).norm();
    }
    return out;
}

/// score_g / (alpha omega_g); unpenalized groups map to 0.
inline vec_type scale_scores(const vec_type& scores, const penalty_config& pc)
{
    vec_type out(scores.size());
    for (index_t g = 0; g < scores.size(); ++g) {
        const value_t f = pc.alpha * pc.omega[g];
        out[g] = f > 0 ? scores[g] / f : 0;
    }
    return out;
}

struct lambda_max_result
{
    value_t lmax = 1;
    gaussian_state state;
};

/**
 * Fits the unpenalized groups U = {g : alpha omega_g = 0} alone and returns
 * max_{g not in U} ||X_g^T W r||_2 / (alpha omega_g) together with that state.
 * Returns 1 when every group is unpenalized or all scores vanish.
 */
inline lambda_max_result lambda_max(
    const grouped_design& d,
    const penalty_config& pc,
    gram_eigen_cache& cache,
    const solver_options& opts,
    bool explicit_intercept = false
)
{
    lambda_max_result out;
    out.state = make_state(d, opts, explicit_intercept);
    bool any_penalized = false;
    for (index_t g = 0; g < d.G(); ++g) {
        if (pc.unpenalized(g)) add_to_screen(out.state, d, g, opts);
        else any_penalized = true;
    }
    fit_single_lambda(out.state, d, pc, cache, 1.0, opts);
    if (!any_penalized) return out;
    const vec_type scaled = scale_scores(group_scores(out.state, d, opts), pc);
    value_t m = 0;
    for (index_t g = 0; g < d.G(); ++g) {
        if (!pc.unpenalized(g)) m = std::max(m, scaled[g]);
    }
    if (m > 0) out.lmax = m;
    return out;
}

/// K values geometrically spaced from lmax down to ratio * lmax.
inline std::vector<value_t> lambda_path(value_t lmax, std::size_t K, value_t ratio)
{
    if (!(lmax > 0) || K < 1 || !(ratio > 0 && ratio <= 1)) {
        throw util::invalid_argument_error("lambda_path: need lmax > 0, K >= 1, ratio in (0, 1].");
    }
    std::vector<value_t> out(K);
    out[0] = lmax;
    if (K == 1) return out;
    const value_t step = std::log(ratio) / static_cast<value_t>(K - 1);
    for (std::size_t k = 1; k < K; ++k) out[k] = lmax * std::exp(step * static_cast<value_t>(k));
    return out;
}

inline value_t default_lambda_ratio(index_t n, index_t p) { return n < p ? 1e-2 : 1e-4; }

/**
 * Strong rule: adds every g outside the screen set whose scaled score
 * (computed at the previous solution) is >= 2 lam - lam_prev.
 * Returns the number of groups added.
 */
inline std::size_t strong_rule_screen(
    gaussian_state& s,
    const grouped_design& d,
    const penalty_config& pc,
    const vec_type& scaled_scores,
    value_t lam_prev,
    value_t lam,
    const solver_options& opts
)
{
    const value_t threshold = 2 * lam - lam_prev;
    std::size_t added = 0;
    for (index_t g = 0; g < d.G(); ++g) {
        if (s.in_screen[g]) continue;
        if (pc.unpenalized(g) || scaled_scores[g] >= threshold) {
            add_to_screen(s, d, g, opts);
            ++added;
        }
    }
    return added;
}

struct kkt_result
{
    std::vector<index_t> violators;
    value_t max_residual = 0;   // max scaled score over groups outside the screen set
};

/// Groups outside the screen set whose scaled score exceeds lam (1 + kkt_slack).
inline kkt_result kkt_check_scores(
    const gaussian_state& s,
    const penalty_config& pc,
    const vec_type& scaled_scores,
    value_t lam,
    value_t slack
)
{
    kkt_result out;
    for (index_t g = 0; g < scaled_scores.size(); ++g) {
        if (s.in_screen[g] || pc.unpenalized(g)) continue;
        out.max_residual = std::max(out.max_residual, scaled_scores[g]);
        if (scaled_scores[g] > lam * (1 + slack)) out.violators.push_back(g);
    }
    return out;
}

inline kkt_result kkt_check(
    const gaussian_state& s,
    const grouped_design& d,
    const penalty_config& pc,
    value_t lam,
    const solver_options& opts
)
{
    return kkt_check_scores(s, pc, scale_scores(group_scores(s, d, opts), pc), lam, opts.kkt_slack);
}

struct path_diagnostics
{
    std::size_t cycles = 0;
    value_t kkt_max_residual = 0;
    std::size_t screen_size = 0;
    std::size_t active_size = 0;
    std::size_t kkt_rounds = 0;
    std::size_t irls_iters = 0;
};

struct path_result
{
    value_t lambda_max = 0;
    std::vector<value_t> lambdas;
    std::vector<sp_vec_type> betas;
    std::vector<value_t> intercepts;
    std::vector<path_diagnostics> diagnostics;
    std::vector<std::vector<index_t>> screen_sets;
};

inline sp_vec_type to_sparse(const vec_type& beta)
{
    sp_vec_type out(beta.size());
    for (index_t i = 0; i < beta.size(); ++i) {
        if (beta[i] != 0) out.insertBack(i) = beta[i];
    }
    return out;
}

/// 1/2 ||y - X beta - beta0||_W^2 + lam P(beta)
inline value_t gaussian_objective(
    const grouped_design& d,
    const penalty_config& pc,
    const util::cref_vec_type& beta,
    value_t beta0,
    value_t lam
)
{
    vec_type r(d.n());
    d.X->mul(beta, r);
    r = d.y - r;
    r.array() -= beta0;
    return 0.5 * d.weights.dot(r.cwiseProduct(r)) + lam * penalty_value(d, pc, beta);
}

/**
 * Centers X and y under W for the intercept model. The returned design
 * wraps X in a centered view; intercept = ybar - centers^T beta.
 */
struct centered_design
{
    grouped_design design;
    vec_type centers;
    value_t y_center = 0;
};

inline centered_design center_design(const grouped_design& d)
{
    centered_design out;
    out.centers = matrix::weighted_column_means(*d.X, d.weights);
    out.y_center = d.weights.dot(d.y);
    out.design = d;
    out.design.X = std::make_shared<matrix::matrix_centered>(d.X, out.centers);
    out.design.y = d.y.array() - out.y_center;
    return out;
}

/**
 * Pathwise BCD for the Gaussian group elastic net: strong-rule screening,
 * active-set cycling, KKT verification and warm starts across lambda.
 * With opts.intercept the data are centered first and the intercept is
 * recovered afterwards.
 */
inline path_result fit_path(const grouped_design& design, const penalty_config& pc, const solver_options& opts)
{
    pc.validate(design.G());
    std::optional<centered_design> cd;
    if (opts.intercept) cd = center_design(design);
    const grouped_design& d = cd ? cd->design : design;

    gram_eigen_cache cache(d.G());
    auto lm = lambda_max(d, pc, cache, opts);
    auto& s = lm.state;

    path_result out;
    out.lambda_max = lm.lmax;
    out.lambdas = pc.lambdas.empty()
        ? lambda_path(lm.lmax, pc.lambda_count,
                      pc.lambda_ratio > 0 ? pc.lambda_ratio : default_lambda_ratio(d.n(), d.p()))
        : pc.lambdas;

    value_t lam_prev = lm.lmax;
    for (const value_t lam : out.lambdas) {
        path_diagnostics diag;
        strong_rule_screen(s, d, pc, scale_scores(group_scores(s, d, opts), pc), std::max(lam_prev, lam), lam, opts);
        while (true) {
            diag.cycles += fit_single_lambda(s, d, pc, cache, lam, opts);
            const auto kkt = kkt_check(s, d, pc, lam, opts);
            diag.kkt_max_residual = kkt.max_residual;
            if (kkt.violators.empty()) break;
            if (++diag.kkt_rounds > opts.max_kkt_rounds) {
                throw util::kkt_loop_limit_error(
                    "fit_path: KKT violations persist after " + std::to_string(opts.max_kkt_rounds)
                    + " screen-refit rounds at lambda = " + std::to_string(lam) + ".");
            }
            for (const auto g : kkt.violators) add_to_screen(s, d, g, opts);
        }
        diag.screen_size = s.screen_set.size();
        diag.active_size = s.active_set.size();
        out.betas.push_back(to_sparse(s.beta));
        out.intercepts.push_back(cd ? cd->y_center - cd->centers.dot(s.beta) : s.beta0);
        out.diagnostics.push_back(diag);
        out.screen_sets.push_back(s.screen_set);
        lam_prev = lam;
    }
    return out;
}

} // namespace solver
} // namespace grpnet
