#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>
#include <grpnet/glm/family.hpp>
#include <grpnet/sim/rng.hpp>
#include <grpnet/util/exceptions.hpp>

namespace grpnet {
namespace sim {

using util::index_t;
using util::value_t;
using util::vec_type;
using util::mat_type;

struct simulated_data
{
    mat_type X;
    vec_type y_gaussian;
    vec_type y_binomial;
    vec_type beta;
    value_t sigma = 0;          // noise standard deviation
    std::vector<index_t> group_sizes;
};

namespace detail {

inline void check_args(index_t n, index_t k, value_t rho, value_t snr)
{
    if (n < 1 || k < 1) throw util::invalid_argument_error("simulate: n and the feature count must be >= 1.");
    if (!(rho >= 0 && rho <= 1)) throw util::invalid_argument_error("simulate: rho must lie in [0, 1].");
    if (!(snr > 0)) throw util::invalid_argument_error("simulate: snr must be positive.");
}

/// Rows sqrt(rho) w_i 1 + sqrt(1 - rho) z_i with w_i, z_ij standard normal (row by row).
inline mat_type equicorrelated(index_t n, index_t k, value_t rho, rng& r)
{
    mat_type out(n, k);
    const value_t a = std::sqrt(rho), b = std::sqrt(1 - rho);
    for (index_t i = 0; i < n; ++i) {
        const value_t w = r.normal();
        for (index_t j = 0; j < k; ++j) out(i, j) = a * w + b * r.normal();
    }
    return out;
}

/// Gaussian response with noise variance Var(X beta) / snr (empirical variance) and a logit Binomial response.
inline void responses(simulated_data& d, value_t snr, rng& r)
{
    const index_t n = d.X.rows();
    const vec_type eta = d.X * d.beta;
    const value_t mean = eta.mean();
    const value_t var = n > 1 ? (eta.array() - mean).square().sum() / static_cast<value_t>(n - 1) : 0;
    d.sigma = std::sqrt(var / snr);
    d.y_gaussian.resize(n);
    for (index_t i = 0; i < n; ++i) d.y_gaussian[i] = eta[i] + d.sigma * r.normal();
    d.y_binomial.resize(n);
    for (index_t i = 0; i < n; ++i) d.y_binomial[i] = r.bernoulli(glm::sigmoid(eta[i])) ? 1 : 0;
}

} // namespace detail

/**
 * Grouped polynomial design: G equicorrelated base features Y_g, each
 * expanded to the group (Y_g, Y_g^2, Y_g^3), so X has 3 G columns.
 * The first 6 coefficients are standard normal, the rest zero.
 */
inline simulated_data simulate_group(index_t n, index_t G, value_t rho, value_t snr, std::uint64_t seed)
{
    detail::check_args(n, G, rho, snr);
    rng r(seed);
    const mat_type Y = detail::equicorrelated(n, G, rho, r);
    simulated_data d;
    d.X.resize(n, 3 * G);
    for (index_t g = 0; g < G; ++g) {
        d.X.col(3 * g) = Y.col(g);
        d.X.col(3 * g + 1) = Y.col(g).array().square();
        d.X.col(3 * g + 2) = Y.col(g).array().cube();
    }
    d.group_sizes.assign(G, 3);
    d.beta = vec_type::Zero(3 * G);
    for (index_t j = 0; j < std::min<index_t>(6, 3 * G); ++j) d.beta[j] = r.normal();
    detail::responses(d, snr, r);
    return d;
}

/// beta_j = (-1)^j exp(-2 (j - 1) / 20) for j = 1..p.
inline vec_type lasso_coefficients(index_t p)
{
    vec_type out(p);
    for (index_t j = 1; j <= p; ++j) {
        out[j - 1] = (j % 2 ? -1.0 : 1.0) * std::exp(-2.0 * static_cast<value_t>(j - 1) / 20.0);
    }
    return out;
}

/// Equicorrelated Gaussian features with alternating, exponentially decaying coefficients.
inline simulated_data simulate_lasso(index_t n, index_t p, value_t rho, value_t snr, std::uint64_t seed)
{
    detail::check_args(n, p, rho, snr);
    rng r(seed);
    simulated_data d;
    d.X = detail::equicorrelated(n, p, rho, r);
    d.group_sizes.assign(p, 1);
    d.beta = lasso_coefficients(p);
    detail::responses(d, snr, r);
    return d;
}

} // namespace sim
} // namespace grpnet
