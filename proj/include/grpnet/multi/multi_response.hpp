#pragma once
#include <memory>
#include <string>
#include <vector>
#include <grpnet/glm/family.hpp>
#include <grpnet/matrix/matrix_concatenate.hpp>
#include <grpnet/matrix/matrix_dense.hpp>
#include <grpnet/matrix/matrix_kronecker_eye.hpp>
#include <grpnet/solver/gaussian.hpp>
#include <grpnet/solver/pqn.hpp>

namespace grpnet {
namespace multi {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;
using matrix::matrix_naive_base;

enum class multi_mode { grouped, ungrouped };

inline multi_mode parse_multi_mode(const std::string& s)
{
    if (s == "grouped") return multi_mode::grouped;
    if (s == "ungrouped") return multi_mode::ungrouped;
    throw util::invalid_argument_error("unknown multi-response mode '" + s + "' (expected grouped or ungrouped).");
}

/**
 * Penalty structure over the p x c coefficient matrix B.
 * grouped: each row B_j. is one group of size c, omega has length p.
 * ungrouped: every entry is its own group, omega has length p * c in the
 * interleaved order j * c + k. Empty omega means all ones.
 */
struct multi_penalty_spec
{
    multi_mode mode = multi_mode::grouped;
    value_t alpha = 1;
    vec_type omega;
    std::vector<value_t> lambdas;
    std::size_t lambda_count = 100;
    value_t lambda_ratio = -1;
};

/// vec(B^T): entry (j, k) at index j * c + k.
inline vec_type flatten_coeffs(const mat_type& B) { return glm::flatten_rows(B); }

inline mat_type unflatten_coeffs(const util::cref_vec_type& v, index_t c) { return glm::unflatten_rows(v, c); }

/**
 * Flattened single-response problem: feature matrix [1 (x) I_c, X (x) I_c]
 * (the first block only with an intercept), group sizes, penalty factors
 * (0 for the intercept group), per-row weights w_i / c and response vec(Y^T).
 */
struct multi_design
{
    std::shared_ptr<const matrix_naive_base> X;
    std::vector<index_t> group_sizes;
    vec_type omega;
    vec_type weights;
    vec_type y;
    index_t n = 0;
    index_t p = 0;
    index_t c = 0;
    bool intercept = false;
};

inline multi_design build_multi_design(
    std::shared_ptr<const matrix_naive_base> X,
    const mat_type& Y,
    const vec_type& w,
    const multi_penalty_spec& spec,
    bool intercept
)
{
    if (!X) throw util::invalid_argument_error("build_multi_design: null matrix.");
    const index_t n = X->rows(), p = X->cols(), c = Y.cols();
    if (Y.rows() != n) {
        throw util::dimension_mismatch_error(
            "build_multi_design: response has " + std::to_string(Y.rows()) + " rows, expected "
            + std::to_string(n) + ".");
    }
    if (c < 1) throw util::invalid_argument_error("build_multi_design: response needs at least one column.");
    const vec_type wn = w.size() ? solver::normalize_weights(w) : vec_type::Constant(n, 1.0 / n);
    if (wn.size() != n) throw util::dimension_mismatch_error("build_multi_design: weights length must equal rows.");

    multi_design out;
    out.n = n;
    out.p = p;
    out.c = c;
    out.intercept = intercept;

    std::vector<std::shared_ptr<const matrix_naive_base>> parts;
    if (intercept) {
        parts.push_back(std::make_shared<matrix::matrix_kronecker_eye>(
            std::make_shared<matrix::matrix_dense>(mat_type::Ones(n, 1)), c));
        out.group_sizes.push_back(c);
    }
    parts.push_back(std::make_shared<matrix::matrix_kronecker_eye>(std::move(X), c));
    out.X = parts.size() == 1 ? parts.front() : std::make_shared<matrix::matrix_concatenate>(std::move(parts));

    const index_t n_pen = spec.mode == multi_mode::grouped ? p : p * c;
    const index_t pen_size = spec.mode == multi_mode::grouped ? c : 1;
    vec_type omega = spec.omega.size() ? spec.omega : vec_type::Ones(n_pen);
    if (omega.size() != n_pen) {
        throw util::dimension_mismatch_error(
            "build_multi_design: penalty factors have length " + std::to_string(omega.size())
            + ", expected " + std::to_string(n_pen) + ".");
    }
    for (index_t g = 0; g < n_pen; ++g) out.group_sizes.push_back(pen_size);
    out.omega.resize(n_pen + (intercept ? 1 : 0));
    if (intercept) out.omega[0] = 0;
    out.omega.tail(n_pen) = omega;

    out.weights.resize(n * c);
    for (index_t i = 0; i < n; ++i)
        for (index_t k = 0; k < c; ++k) out.weights[i * c + k] = wn[i] / c;
    out.y = glm::flatten_rows(Y);
    return out;
}

/// Per-lambda coefficient matrices (p x c) and intercept vectors (length c).
struct multi_path_result
{
    value_t lambda_max = 0;
    std::vector<value_t> lambdas;
    std::vector<mat_type> coefs;
    std::vector<vec_type> intercepts;
    std::vector<solver::path_diagnostics> diagnostics;
    solver::path_result flat;
    std::vector<index_t> group_sizes;
};

inline solver::penalty_config multi_penalty_config(const multi_design& md, const multi_penalty_spec& spec)
{
    solver::penalty_config pc;
    pc.alpha = spec.alpha;
    pc.omega = md.omega;
    pc.lambdas = spec.lambdas;
    pc.lambda_count = spec.lambda_count;
    pc.lambda_ratio = spec.lambda_ratio;
    return pc;
}

/**
 * Multi-response group elastic net. The loss is averaged over the c
 * responses (row weight w_i / c per cell). multigaussian runs the Gaussian
 * path solver on the flattened problem; multinomial runs the proximal
 * Newton path with the 2 diag(hessian) majorizer.
 */
inline multi_path_result fit_multi_path(
    std::shared_ptr<const matrix_naive_base> X,
    const mat_type& Y,
    const vec_type& w,
    const multi_penalty_spec& spec,
    const std::string& family,
    bool intercept,
    const solver::solver_options& opts,
    const solver::glm_config& gcfg = solver::glm_config()
)
{
    const auto md = build_multi_design(std::move(X), Y, w, spec, intercept);
    const auto pc = multi_penalty_config(md, spec);
    multi_path_result out;
    out.group_sizes = md.group_sizes;

    solver::solver_options inner = opts;
    inner.intercept = false;
    if (family == "multigaussian") {
        const auto d = solver::make_design(md.X, md.group_sizes, md.y, md.weights);
        out.flat = solver::fit_path(d, pc, inner);
    } else if (family == "multinomial") {
        vec_type wr(md.n);
        for (index_t i = 0; i < md.n; ++i) wr[i] = md.weights[i * md.c];
        auto fam = std::make_shared<glm::glm_multinomial>(Y, wr);
        solver::glm_config cfg = gcfg;
        cfg.intercept = false;
        out.flat = solver::fit_glm_path(solver::make_glm_problem(md.X, md.group_sizes, fam), pc, cfg, inner);
    } else {
        throw util::invalid_argument_error("fit_multi_path: family must be multigaussian or multinomial, got '"
            + family + "'.");
    }

    out.lambda_max = out.flat.lambda_max;
    out.lambdas = out.flat.lambdas;
    out.diagnostics = out.flat.diagnostics;
    const index_t off = intercept ? md.c : 0;
    for (const auto& b : out.flat.betas) {
        const vec_type dense = b;
        out.intercepts.push_back(intercept ? vec_type(dense.head(md.c)) : vec_type::Zero(md.c));
        out.coefs.push_back(unflatten_coeffs(dense.segment(off, md.p * md.c), md.c));
    }
    return out;
}

} // namespace multi
} // namespace grpnet
