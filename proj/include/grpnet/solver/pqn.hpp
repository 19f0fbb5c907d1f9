#pragma once
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>
#include <grpnet/glm/family.hpp>
#include <grpnet/solver/gaussian.hpp>

namespace grpnet {
namespace solver {

using util::cref_vec_type;

/**
 * Called after every IRLS step with the lambda, the step number within that
 * lambda (1-based) and the penalized loss l(eta) + lam P(beta) after the step.
 */
using irls_observer = std::function<void(value_t lam, std::size_t iter, value_t penalized_loss)>;

struct glm_config
{
    vec_type offset;                    // empty means zero
    std::size_t irls_max_iter = 100;
    value_t irls_eps = 1e-8;
    bool intercept = true;              // explicit unpenalized intercept coordinate
    value_t hessian_floor = glm::default_hessian_floor;
    irls_observer observer;
};

/// Feature matrix, contiguous groups and the family (which owns y and weights).
struct glm_problem
{
    std::shared_ptr<const matrix_naive_base> X;
    std::vector<index_t> group_starts;
    std::vector<index_t> group_sizes;
    std::shared_ptr<const glm::glm_base> family;

    index_t n() const { return X->rows(); }
    index_t p() const { return X->cols(); }
    index_t G() const { return static_cast<index_t>(group_sizes.size()); }
};

inline glm_problem make_glm_problem(
    std::shared_ptr<const matrix_naive_base> X,
    std::vector<index_t> group_sizes,
    std::shared_ptr<const glm::glm_base> family
)
{
    if (!X || !family) throw util::invalid_argument_error("make_glm_problem: null matrix or family.");
    index_t total = 0;
    for (auto s : group_sizes) {
        if (s < 1) throw util::invalid_argument_error("make_glm_problem: group sizes must be >= 1.");
        total += s;
    }
    if (total != X->cols()) {
        throw util::dimension_mismatch_error(
            "make_glm_problem: group sizes sum to " + std::to_string(total)
            + " but the matrix has " + std::to_string(X->cols()) + " columns.");
    }
    if (family->size() != X->rows()) {
        throw util::dimension_mismatch_error(
            "make_glm_problem: family has " + std::to_string(family->size())
            + " linear predictor entries but the matrix has " + std::to_string(X->rows()) + " rows.");
    }
    glm_problem out;
    out.X = std::move(X);
    out.group_starts = starts_from_sizes(group_sizes);
    out.group_sizes = std::move(group_sizes);
    out.family = std::move(family);
    return out;
}

/// Coefficients, linear predictor eta = X beta + beta0 + offset and the loss gradient at eta.
struct glm_state
{
    vec_type beta;
    value_t beta0 = 0;
    vec_type eta;
    vec_type grad;
    std::vector<index_t> screen_set;
    std::vector<char> in_screen;
    std::vector<index_t> active_set;
    std::size_t n_active_coeffs = 0;
};

inline vec_type glm_offset(const glm_problem& prob, const glm_config& cfg)
{
    if (cfg.offset.size() == 0) return vec_type::Zero(prob.n());
    if (cfg.offset.size() != prob.n()) {
        throw util::dimension_mismatch_error("glm: offset length must equal the matrix rows.");
    }
    return cfg.offset;
}

inline void glm_refresh_eta(glm_state& s, const glm_problem& prob, const vec_type& offset)
{
    s.eta.resize(prob.n());
    prob.X->mul(s.beta, s.eta);
    s.eta.array() += s.beta0;
    s.eta += offset;
    s.grad = prob.family->gradient(s.eta);
    const value_t l = prob.family->loss(s.eta);
    if (!std::isfinite(l) || !s.grad.allFinite()) {
        throw util::non_finite_loss_error("glm: loss is not finite at the current linear predictor.");
    }
}

inline glm_state make_glm_state(const glm_problem& prob, const glm_config& cfg)
{
    glm_state s;
    s.beta = vec_type::Zero(prob.p());
    s.in_screen.assign(prob.G(), 0);
    glm_refresh_eta(s, prob, glm_offset(prob, cfg));
    return s;
}

inline void glm_add_to_screen(glm_state& s, index_t g)
{
    if (s.in_screen[g]) return;
    s.in_screen[g] = 1;
    s.screen_set.push_back(g);
}

/// True when |(eta_next - eta_prev)^T (grad_next - grad_prev)| <= eps * max(1, n_active_coeffs).
inline bool irls_converged(
    const cref_vec_type& eta_prev,
    const cref_vec_type& eta_next,
    const cref_vec_type& grad_prev,
    const cref_vec_type& grad_next,
    std::size_t n_active_coeffs,
    value_t eps
)
{
    const value_t crit = std::abs((eta_next - eta_prev).dot(grad_next - grad_prev));
    return crit <= eps * static_cast<value_t>(std::max<std::size_t>(n_active_coeffs, 1));
}

struct irls_step_result
{
    bool converged = false;
    std::size_t cycles = 0;
};

/**
 * One proximal Newton step at lam: the quadratic expansion of the loss at
 * the current eta is a weighted least squares problem with working response
 * z = eta - offset - grad / h and weights h (floored hessian majorizer).
 * The weights are normalized to sum to one, which rescales lam by 1 / sum(h).
 * The surrogate is solved over the screen set by the Gaussian solver.
 */
inline irls_step_result irls_step(
    glm_state& s,
    const glm_problem& prob,
    const penalty_config& pc,
    const glm_config& cfg,
    value_t lam,
    const solver_options& opts
)
{
    const vec_type offset = glm_offset(prob, cfg);
    const vec_type h = glm::apply_hessian_floor(prob.family->hessian(s.eta), cfg.hessian_floor);
    const value_t total = h.sum();

    grouped_design d;
    d.X = prob.X;
    d.group_starts = prob.group_starts;
    d.group_sizes = prob.group_sizes;
    d.weights = h / total;
    d.y = s.eta - offset - s.grad.cwiseQuotient(h);

    solver_options inner = opts;
    inner.intercept = false;
    auto gs = make_state(d, inner, cfg.intercept, s.beta, s.beta0);
    for (const auto g : s.screen_set) add_to_screen(gs, d, g, inner);
    gram_eigen_cache cache(d.G());

    irls_step_result out;
    out.cycles = fit_single_lambda(gs, d, pc, cache, lam / total, inner);

    const vec_type eta_prev = s.eta;
    const vec_type grad_prev = s.grad;
    s.beta = gs.beta;
    s.beta0 = gs.beta0;
    for (const auto g : gs.screen_set) glm_add_to_screen(s, g);
    s.active_set = gs.active_set;
    s.n_active_coeffs = gs.n_active_coeffs;
    glm_refresh_eta(s, prob, offset);
    out.converged = irls_converged(eta_prev, s.eta, grad_prev, s.grad, s.n_active_coeffs, cfg.irls_eps);
    return out;
}

/// l(eta) + lam P(beta)
inline value_t glm_objective(const glm_state& s, const glm_problem& prob, const penalty_config& pc, value_t lam)
{
    value_t pen = 0;
    for (index_t g = 0; g < prob.G(); ++g) {
        const value_t nrm = s.beta.segment(prob.group_starts[g], prob.group_sizes[g]).norm();
        pen += pc.omega[g] * (pc.alpha * nrm + 0.5 * (1 - pc.alpha) * nrm * nrm);
    }
    return prob.family->loss(s.eta) + lam * pen;
}

/// Runs IRLS steps at lam until convergence. Returns (steps, inner cycles).
inline std::pair<std::size_t, std::size_t> glm_fit_single_lambda(
    glm_state& s,
    const glm_problem& prob,
    const penalty_config& pc,
    const glm_config& cfg,
    value_t lam,
    const solver_options& opts
)
{
    std::size_t cycles = 0;
    for (std::size_t it = 1; it <= cfg.irls_max_iter; ++it) {
        const auto r = irls_step(s, prob, pc, cfg, lam, opts);
        cycles += r.cycles;
        if (cfg.observer) cfg.observer(lam, it, glm_objective(s, prob, pc, lam));
        if (r.converged) return {it, cycles};
    }
    throw util::iteration_limit_error(
        "glm: IRLS did not converge after " + std::to_string(cfg.irls_max_iter)
        + " iterations at lambda = " + std::to_string(lam) + ".");
}

/// ||X_g^T grad||_2 / (alpha omega_g) for every group (0 for unpenalized groups).
inline vec_type glm_scaled_scores(const glm_state& s, const glm_problem& prob, const penalty_config& pc, const solver_options& opts)
{
    const vec_type ones = vec_type::Ones(prob.n());
    return scale_scores(
        matrix::score_all_groups(*prob.X, prob.group_starts, prob.group_sizes, ones, s.grad, opts.n_threads), pc);
}

struct glm_lambda_max_result
{
    value_t lmax = 1;
    glm_state state;
    std::size_t irls_iters = 0;
};

/**
 * Fits the intercept and the unpenalized groups alone, then returns
 * max_{g not in U} ||X_g^T grad||_2 / (alpha omega_g) with that state.
 */
inline glm_lambda_max_result glm_lambda_max(
    const glm_problem& prob,
    const penalty_config& pc,
    const glm_config& cfg,
    const solver_options& opts
)
{
    glm_lambda_max_result out;
    out.state = make_glm_state(prob, cfg);
    bool any_penalized = false;
    for (index_t g = 0; g < prob.G(); ++g) {
        if (pc.unpenalized(g)) glm_add_to_screen(out.state, g);
        else any_penalized = true;
    }
    if (cfg.intercept || !out.state.screen_set.empty()) {
        out.irls_iters = glm_fit_single_lambda(out.state, prob, pc, cfg, 1.0, opts).first;
    }
    if (!any_penalized) return out;
    const vec_type scaled = glm_scaled_scores(out.state, prob, pc, opts);
    value_t m = 0;
    for (index_t g = 0; g < prob.G(); ++g) {
        if (!pc.unpenalized(g)) m = std::max(m, scaled[g]);
    }
    if (m > 0) out.lmax = m;
    return out;
}

/**
 * Pathwise proximal Newton: strong-rule screening and KKT checks use the
 * loss gradient at the current solution; warm starts carry beta, the
 * intercept and the screen set across lambda.
 */
inline path_result fit_glm_path(
    const glm_problem& prob,
    const penalty_config& pc,
    const glm_config& cfg,
    const solver_options& opts
)
{
    pc.validate(prob.G());
    if (cfg.intercept && opts.mode == update_mode::covariance) {
        throw util::invalid_argument_error("glm: the intercept coordinate requires naive mode.");
    }
    auto lm = glm_lambda_max(prob, pc, cfg, opts);
    auto& s = lm.state;

    path_result out;
    out.lambda_max = lm.lmax;
    out.lambdas = pc.lambdas.empty()
        ? lambda_path(lm.lmax, pc.lambda_count,
                      pc.lambda_ratio > 0 ? pc.lambda_ratio : default_lambda_ratio(prob.n(), prob.p()))
        : pc.lambdas;

    value_t lam_prev = lm.lmax;
    for (const value_t lam : out.lambdas) {
        path_diagnostics diag;
        {
            const vec_type scaled = glm_scaled_scores(s, prob, pc, opts);
            const value_t threshold = 2 * lam - std::max(lam_prev, lam);
            for (index_t g = 0; g < prob.G(); ++g) {
                if (!s.in_screen[g] && (pc.unpenalized(g) || scaled[g] >= threshold)) glm_add_to_screen(s, g);
            }
        }
        while (true) {
            const auto [iters, cycles] = glm_fit_single_lambda(s, prob, pc, cfg, lam, opts);
            diag.irls_iters += iters;
            diag.cycles += cycles;
            const vec_type scaled = glm_scaled_scores(s, prob, pc, opts);
            std::vector<index_t> violators;
            diag.kkt_max_residual = 0;
            for (index_t g = 0; g < prob.G(); ++g) {
                if (s.in_screen[g] || pc.unpenalized(g)) continue;
                diag.kkt_max_residual = std::max(diag.kkt_max_residual, scaled[g]);
                if (scaled[g] > lam * (1 + opts.kkt_slack)) violators.push_back(g);
            }
            if (violators.empty()) break;
            if (++diag.kkt_rounds > opts.max_kkt_rounds) {
                throw util::kkt_loop_limit_error(
                    "fit_glm_path: KKT violations persist after " + std::to_string(opts.max_kkt_rounds)
                    + " screen-refit rounds at lambda = " + std::to_string(lam) + ".");
            }
            for (const auto g : violators) glm_add_to_screen(s, g);
        }
        diag.screen_size = s.screen_set.size();
        diag.active_size = s.active_set.size();
        out.betas.push_back(to_sparse(s.beta));
        out.intercepts.push_back(s.beta0);
        out.diagnostics.push_back(diag);
        out.screen_sets.push_back(s.screen_set);
        lam_prev = lam;
    }
    return out;
}

} // namespace solver
} // namespace grpnet
