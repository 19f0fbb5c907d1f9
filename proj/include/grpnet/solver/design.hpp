#pragma once
#include <cmath>
#include <memory>
#include <string>
#include <vector>
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace solver {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;
using util::sp_vec_type;
using matrix::matrix_naive_base;

/**
 * Feature matrix handle, contiguous group partition of its columns,
 * observation weights (normalized to sum to 1) and response.
 */
struct grouped_design
{
    std::shared_ptr<const matrix_naive_base> X;
    std::vector<index_t> group_starts;
    std::vector<index_t> group_sizes;
    vec_type weights;
    vec_type y;

    index_t n() const { return X->rows(); }
    index_t p() const { return X->cols(); }
    index_t G() const { return static_cast<index_t>(group_sizes.size()); }
};

inline vec_type normalize_weights(const util::cref_vec_type& w)
{
    if (!(w.array() >= 0).all() || !w.allFinite()) {
        throw util::invalid_argument_error("weights must be nonnegative and finite.");
    }
    const value_t s = w.sum();
    if (!(s > 0)) throw util::invalid_argument_error("weights must have a positive sum.");
    return w / s;
}

inline std::vector<index_t> starts_from_sizes(const std::vector<index_t>& sizes)
{
    std::vector<index_t> starts(sizes.size());
    index_t acc = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        starts[g] = acc;
        acc += sizes[g];
    }
    return starts;
}

/**
 * Builds a validated design. Empty weights mean uniform 1/n.
 */
inline grouped_design make_design(
    std::shared_ptr<const matrix_naive_base> X,
    std::vector<index_t> group_sizes,
    vec_type y,
    vec_type weights = vec_type()
)
{
    if (!X) throw util::invalid_argument_error("make_design: null matrix.");
    const index_t n = X->rows();
    const index_t p = X->cols();
    index_t total = 0;
    for (auto s : group_sizes) {
        if (s < 1) throw util::invalid_argument_error("make_design: group sizes must be >= 1.");
        total += s;
    }
    if (total != p) {
        throw util::dimension_mismatch_error(
            "make_design: group sizes sum to " + std::to_string(total)
            + " but the matrix has " + std::to_string(p) + " columns.");
    }
    if (y.size() != n) {
        throw util::dimension_mismatch_error(
            "make_design: response has length " + std::to_string(y.size())
            + ", expected " + std::to_string(n) + ".");
    }
    if (weights.size() == 0) weights = vec_type::Constant(n, 1.0 / n);
    if (weights.size() != n) {
        throw util::dimension_mismatch_error("make_design: weights length must equal rows.");
    }
    grouped_design d;
    d.X = std::move(X);
    d.group_starts = starts_from_sizes(group_sizes);
    d.group_sizes = std::move(group_sizes);
    d.weights = normalize_weights(weights);
    d.y = std::move(y);
    return d;
}

/**
 * Elastic net mixing alpha, per-group penalty factors omega and the lambda
 * sequence policy: an explicit strictly decreasing list, or a geometric
 * path of lambda_count values from lambda_max down to lambda_ratio * lambda_max.
 * lambda_ratio <= 0 selects the default (0.01 when n < p, else 1e-4).
 */
struct penalty_config
{
    value_t alpha = 1;
    vec_type omega;
    std::vector<value_t> lambdas;
    std::size_t lambda_count = 100;
    value_t lambda_ratio = -1;

    void validate(index_t G) const
    {
        if (!(alpha >= 0 && alpha <= 1)) {
            throw util::invalid_argument_error("penalty_config: alpha must lie in [0, 1].");
        }
        if (omega.size() != G) {
            throw util::dimension_mismatch_error(
                "penalty_config: omega has length " + std::to_string(omega.size())
                + ", expected " + std::to_string(G) + ".");
        }
        if (!(omega.array() >= 0).all() || !omega.allFinite()) {
            throw util::invalid_argument_error("penalty_config: omega must be nonnegative.");
        }
        for (std::size_t k = 0; k < lambdas.size(); ++k) {
            if (!(lambdas[k] > 0) || !std::isfinite(lambdas[k])) {
                throw util::invalid_argument_error("penalty_config: lambdas must be positive.");
            }
            if (k && !(lambdas[k] < lambdas[k - 1])) {
                throw util::invalid_argument_error("penalty_config: lambdas must be strictly decreasing.");
            }
        }
        if (lambdas.empty() && lambda_count < 1) {
            throw util::invalid_argument_error("penalty_config: lambda_count must be >= 1.");
        }
        if (lambda_ratio > 1) {
            throw util::invalid_argument_error("penalty_config: lambda_ratio must lie in (0, 1].");
        }
    }

    bool unpenalized(index_t g) const { return omega[g] * alpha == 0; }
};

inline penalty_config make_penalty(index_t G, value_t alpha = 1)
{
    penalty_config pc;
    pc.alpha = alpha;
    pc.omega = vec_type::Ones(G);
    return pc;
}

/// P(beta) = sum_g omega_g (alpha ||beta_g|| + (1 - alpha)/2 ||beta_g||^2)
inline value_t penalty_value(const grouped_design& d, const penalty_config& pc, const util::cref_vec_type& beta)
{
    value_t out = 0;
    for (index_t g = 0; g < d.G(); ++g) {
        const value_t nrm = beta.segment(d.group_starts[g], d.group_sizes[g]).norm();
        out += pc.omega[g] * (pc.alpha * nrm + 0.5 * (1 - pc.alpha) * nrm * nrm);
    }
    return out;
}

} // namespace solver
} // namespace grpnet
