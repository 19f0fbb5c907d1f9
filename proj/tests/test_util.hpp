#pragma once
#include <cmath>
#include <algorithm>
#include <random>
#include <vector>
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace test_util {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;

inline vec_type randn(index_t n, std::mt19937_64& gen)
{
    std::normal_distribution<value_t> nd;
    vec_type out(n);
    for (index_t i = 0; i < n; ++i) out[i] = nd(gen);
    return out;
}

inline mat_type randn(index_t n, index_t p, std::mt19937_64& gen)
{
    std::normal_distribution<value_t> nd;
    mat_type out(n, p);
    for (index_t j = 0; j < p; ++j)
        for (index_t i = 0; i < n; ++i) out(i, j) = nd(gen);
    return out;
}

inline vec_type runif(index_t n, value_t lo, value_t hi, std::mt19937_64& gen)
{
    std::uniform_real_distribution<value_t> ud(lo, hi);
    vec_type out(n);
    for (index_t i = 0; i < n; ++i) out[i] = ud(gen);
    return out;
}

/// Materializes any feature matrix column by column through btmul.
inline mat_type to_dense(const matrix::matrix_naive_base& X)
{
    mat_type out = mat_type::Zero(X.rows(), X.cols());
    vec_type unit(1);
    unit[0] = 1;
    for (index_t j = 0; j < X.cols(); ++j) {
        vec_type col = vec_type::Zero(X.rows());
        X.btmul(j, 1, unit, col);
        out.col(j) = col;
    }
    return out;
}

/**
 * Reference weighted lasso by plain cyclic coordinate descent with soft
 * thresholding: minimize 1/2 sum_i w_i (y_i - x_i^T b)^2 + lam ||b||_1.
 * Runs to a coefficient-change tolerance of 1e-15.
 */
inline vec_type cd_lasso(const mat_type& X, const vec_type& y, const vec_type& w, value_t lam, vec_type b = vec_type())
{
    const index_t p = X.cols();
    if (b.size() != p) b = vec_type::Zero(p);
    vec_type r = y - X * b;
    vec_type h(p);
    for (index_t j = 0; j < p; ++j) h[j] = (X.col(j).array().square() * w.array()).sum();
    for (int it = 0; it < 200000; ++it) {
        value_t dmax = 0;
        for (index_t j = 0; j < p; ++j) {
            if (h[j] <= 0) continue;
            const value_t z = (X.col(j).array() * w.array() * r.array()).sum() + h[j] * b[j];
            const value_t bn = std::copysign(std::max<value_t>(std::abs(z) - lam, 0), z) / h[j];
            const value_t db = bn - b[j];
            if (db != 0) {
                r -= db * X.col(j);
                b[j] = bn;
                dmax = std::max(dmax, std::abs(db));
            }
        }
        if (dmax < 1e-15) break;
    }
    return b;
}

/**
 * Largest violation of the group elastic net optimality conditions, relative
 * to lam, for 1/2 ||y - X b - b0||_W^2 + lam sum_g omega_g (alpha ||b_g|| + (1-alpha)/2 ||b_g||^2).
 */
inline value_t full_kkt_violation(
    const mat_type& X, const vec_type& y, const vec_type& w, value_t b0,
    const vec_type& b, const std::vector<index_t>& starts, const std::vector<index_t>& sizes,
    const vec_type& omega, value_t alpha, value_t lam)
{
    const vec_type r = (y - X * b).array() - b0;
    const vec_type grad = X.transpose() * (w.asDiagonal() * r);
    value_t worst = 0;
    for (std::size_t g = 0; g < starts.size(); ++g) {
        const vec_type gg = grad.segment(starts[g], sizes[g]);
        const vec_type bg = b.segment(starts[g], sizes[g]);
        const value_t l1 = lam * omega[g] * alpha;
        const value_t l2 = lam * omega[g] * (1 - alpha);
        const value_t nb = bg.norm();
        value_t v;
        if (nb == 0) v = std::max<value_t>(gg.norm() - l1, 0);
        else v = (gg - l2 * bg - l1 * bg / nb).norm();
        worst = std::max(worst, v / lam);
    }
    return worst;
}

inline value_t rel_err(value_t a, value_t b)
{
    return std::abs(a - b) / std::max<value_t>(1, std::max(std::abs(a), std::abs(b)));
}

inline value_t max_abs_diff(const vec_type& a, const vec_type& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace test_util
} // namespace grpnet
