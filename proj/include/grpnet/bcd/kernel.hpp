#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace bcd {

using util::value_t;
using util::index_t;
using util::vec_type;

inline constexpr value_t default_kernel_tol = 1e-12;
inline constexpr std::size_t default_kernel_max_iters = 100;
inline constexpr value_t default_sigma_tol = 1e-10;

// Bisection is skipped (Newton starts at the lower bound) once the bracket
// [lower, upper] is narrower than bisect_skip_width * max(1, lower).
inline constexpr value_t bisect_skip_width = 0.1;
// Floor on the adaptive bisection prior weight.
inline constexpr value_t bisect_min_weight = 0.05;

/**
 * Block update problem
 *
 *      minimize_x  1/2 x^T diag(sigma) x - v^T x + lam ||x||_2
 *
 * with sigma >= 0 and lam > 0. Entries of v where sigma is numerically zero
 * (below sigma_tol * max(sigma)) are zeroed at construction so that a
 * finite minimizer always exists.
 */
class diag_quad_problem
{
    vec_type _sigma;
    vec_type _v;
    value_t _lam;

    diag_quad_problem(vec_type sigma, vec_type v, value_t lam)
        : _sigma(std::move(sigma)), _v(std::move(v)), _lam(lam)
    {}

public:
    static diag_quad_problem make(
        const Eigen::Ref<const vec_type>& sigma,
        const Eigen::Ref<const vec_type>& v,
        value_t lam,
        value_t sigma_tol = default_sigma_tol
    )
    {
        const auto d = sigma.size();
        if (d < 1) {
            throw util::invalid_argument_error("diag_quad_problem: dimension must be >= 1.");
        }
        if (v.size() != d) {
            throw util::dimension_mismatch_error(
                "diag_quad_problem: sigma has size " + std::to_string(d)
                + " but v has size " + std::to_string(v.size()) + ".");
        }
        if (!(lam > 0) || !std::isfinite(lam)) {
            throw util::invalid_argument_error("diag_quad_problem: lam must be positive and finite.");
        }
        if (!(sigma.array() >= 0).all() || !sigma.allFinite() || !v.allFinite()) {
            throw util::invalid_argument_error("diag_quad_problem: sigma must be nonnegative and finite.");
        }
        vec_type vv = v;
        const value_t cutoff = sigma_tol * sigma.maxCoeff();
        for (index_t i = 0; i < d; ++i) {
            if (sigma[i] <= cutoff) vv[i] = 0;
        }
        return diag_quad_problem(sigma, std::move(vv), lam);
    }

    const vec_type& sigma() const { return _sigma; }
    const vec_type& v() const { return _v; }
    value_t lam() const { return _lam; }
    index_t size() const { return _sigma.size(); }
};

struct kernel_solution
{
    vec_type x;
    value_t h = 0;
    std::size_t bisect_iters = 0;
    std::size_t newton_iters = 0;
};

struct root_result
{
    value_t h = 0;
    std::size_t iters = 0;
};

/// phi(h) = sum_i v_i^2 / (sigma_i h + lam)^2 - 1
inline value_t phi(const diag_quad_problem& p, value_t h)
{
    const auto& s = p.sigma();
    const auto& v = p.v();
    value_t sum = 0;
    for (index_t i = 0; i < s.size(); ++i) {
        const value_t t = v[i] / (s[i] * h + p.lam());
        sum += t * t;
    }
    return sum - 1;
}

inline value_t phi_prime(const diag_quad_problem& p, value_t h)
{
    const auto& s = p.sigma();
    const auto& v = p.v();
    value_t sum = 0;
    for (index_t i = 0; i < s.size(); ++i) {
        const value_t a = s[i] * h + p.lam();
        sum += v[i] * v[i] * s[i] / (a * a * a);
    }
    return -2 * sum;
}

namespace detail {

inline void phi_and_prime(const diag_quad_problem& p, value_t h, value_t& f, value_t& df)
{
    const auto& s = p.sigma();
    const auto& v = p.v();
    value_t sum = 0;
    value_t dsum = 0;
    for (index_t i = 0; i < s.size(); ++i) {
        const value_t inv = 1 / (s[i] * h + p.lam());
        const value_t t = v[i] * inv;
        const value_t t2 = t * t;
        sum += t2;
        dsum += t2 * s[i] * inv;
    }
    f = sum - 1;
    df = -2 * dsum;
}

} // namespace detail

/**
 * Largest h >= 0 with sum_i (sigma_i h + lam)^2 <= ||v||_1^2.
 * By Cauchy-Schwarz this guarantees phi(h) >= 0.
 * Returns 0 when no positive h satisfies the inequality.
 */
inline value_t lower_bound(const diag_quad_problem& p)
{
    const auto& s = p.sigma();
    const value_t lam = p.lam();
    const value_t a = s.squaredNorm();
    const value_t b_half = lam * s.sum();
    const value_t v_l1 = p.v().lpNorm<1>();
    const value_t c = lam * lam * static_cast<value_t>(s.size()) - v_l1 * v_l1;
    if (a <= 0 || c >= 0) return 0;
    const value_t discr = b_half * b_half - a * c;
    if (discr < 0) return 0;
    // positive root of a h^2 + 2 b_half h + c, written to avoid cancellation
    const value_t h = -c / (b_half + std::sqrt(discr));
    return std::max<value_t>(h, 0);
}

/// sqrt(sum_{i: sigma_i > 0} v_i^2 / sigma_i^2); guarantees phi(h) <= 0.
inline value_t upper_bound(const diag_quad_problem& p)
{
    const auto& s = p.sigma();
    const auto& v = p.v();
    value_t sum = 0;
    for (index_t i = 0; i < s.size(); ++i) {
        if (s[i] <= 0) continue;
        const value_t t = v[i] / s[i];
        sum += t * t;
    }
    return std::sqrt(sum);
}

/**
 * Newton's method on phi starting at h0, which must satisfy phi(h0) >= -eps.
 * Since phi is decreasing and convex the iterates increase monotonically
 * towards the root. If trajectory is non-null every iterate (including h0)
 * is appended to it.
 */
inline root_result newton_root(
    const diag_quad_problem& p,
    value_t h0,
    value_t eps = default_kernel_tol,
    std::size_t max_iters = default_kernel_max_iters,
    std::vector<value_t>* trajectory = nullptr
)
{
    if (!(h0 >= 0)) {
        throw util::invalid_argument_error("newton_root: h0 must be nonnegative.");
    }
    value_t f, df;
    detail::phi_and_prime(p, h0, f, df);
    if (f < -eps) {
        throw util::invalid_argument_error("newton_root: phi(h0) must be >= -eps.");
    }
    root_result out{h0, 0};
    if (trajectory) trajectory->push_back(h0);
    while (std::abs(f) > eps) {
        if (out.iters >= max_iters) {
            throw util::iteration_limit_error(
                "newton_root: |phi(h)| = " + std::to_string(std::abs(f))
                + " > eps after " + std::to_string(max_iters) + " iterations.");
        }
        out.h -= f / df;
        ++out.iters;
        if (trajectory) trajectory->push_back(out.h);
        detail::phi_and_prime(p, out.h, f, df);
    }
    return out;
}

/**
 * Adaptive bisection between lower_bound and upper_bound.
 * Starting from the upper bound, moves towards the lower bound with weight
 * w = lam / (sigma_min * h_upper + lam) (floored at bisect_min_weight)
 * until phi(h) >= -eps. Requires ||v||_2 > lam.
 *
 * Whenever the remaining bracket is narrow (see bisect_skip_width) the lower
 * bound itself is returned: phi(lower) >= 0 and Newton converges quickly
 * from there, while bisection would only creep towards it.
 */
inline root_result adaptive_bisection(
    const diag_quad_problem& p,
    value_t eps = default_kernel_tol,
    std::size_t max_iters = default_kernel_max_iters
)
{
    const value_t lam = p.lam();
    const value_t h_lo = lower_bound(p);
    value_t h_hi = upper_bound(p);
    const value_t skip_width = bisect_skip_width * std::max<value_t>(1, h_lo);
    if (h_hi - h_lo < skip_width) return {h_lo, 0};

    const auto& s = p.sigma();
    value_t sigma_min = std::numeric_limits<value_t>::infinity();
    for (index_t i = 0; i < s.size(); ++i) {
        if (s[i] > 0) sigma_min = std::min(sigma_min, s[i]);
    }

    root_result out{h_hi, 0};
    while (phi(p, out.h) < -eps) {
        if (out.iters >= max_iters) {
            throw util::iteration_limit_error(
                "adaptive_bisection: no point with phi >= -eps found after "
                + std::to_string(max_iters) + " iterations.");
        }
        h_hi = out.h;
        if (h_hi - h_lo < skip_width) {
            out.h = h_lo;
            break;
        }
        const value_t w = std::max(lam / (sigma_min * h_hi + lam), bisect_min_weight);
        out.h = w * h_lo + (1 - w) * h_hi;
        ++out.iters;
    }
    return out;
}

/**
 * Exact solution of the block update: zero when ||v||_2 <= lam, otherwise
 * x = v h / (sigma h + lam) where h = ||x||_2 is the root of phi found by
 * Newton-ABS.
 *
 * |phi(h)| <= eps only bounds the error in h by eps / |phi'(h)|, which is
 * large where phi is flat (large h). One further Newton step is taken
 * whenever the pending step exceeds eps, so that h (and therefore x) is
 * accurate in absolute terms.
 */
inline kernel_solution solve_bcd(
    const diag_quad_problem& p,
    value_t eps = default_kernel_tol,
    std::size_t max_iters = default_kernel_max_iters
)
{
    kernel_solution sol;
    const auto& v = p.v();
    const auto& s = p.sigma();
    if (v.norm() <= p.lam()) {
        sol.x = vec_type::Zero(v.size());
        return sol;
    }
    const auto abs = adaptive_bisection(p, eps, max_iters);
    sol.bisect_iters = abs.iters;
    sol.h = abs.h;
    if (std::abs(phi(p, sol.h)) > eps) {
        const auto nr = newton_root(p, sol.h, eps, max_iters);
        sol.h = nr.h;
        sol.newton_iters = nr.iters;
    }
    value_t f, df;
    detail::phi_and_prime(p, sol.h, f, df);
    if (df < 0 && std::abs(f / df) > eps) {
        sol.h -= f / df;
        ++sol.newton_iters;
    }
    sol.x = (v.array() * sol.h / (s.array() * sol.h + p.lam())).matrix();
    return sol;
}

/**
 * Closed-form d = 1 update: sign(v) (|v| - lam)_+ / sigma.
 * lam = 0 is accepted (unpenalized coordinate).
 */
inline value_t soft_threshold(value_t sigma, value_t v, value_t lam)
{
    const value_t av = std::abs(v);
    if (av <= lam) return 0;
    if (!(sigma > 0)) {
        throw util::invalid_argument_error("soft_threshold: sigma must be positive when |v| > lam.");
    }
    return std::copysign(av - lam, v) / sigma;
}

} // namespace bcd
} // namespace grpnet
