#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace linalg {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;

inline constexpr std::size_t default_jacobi_max_sweeps = 30;
inline constexpr value_t default_jacobi_tol = 1e-13;

struct eigen_result
{
    mat_type Q;         // orthogonal, columns are eigenvectors
    vec_type lambda;    // descending, clamped at 0
    std::size_t sweeps = 0;
};

/**
 * Cyclic Jacobi eigendecomposition of a symmetric PSD matrix.
 * Stops once the off-diagonal Frobenius norm is at most tol * ||a||_F.
 * Eigenvalues are returned in descending order with negatives clamped to 0.
 */
inline eigen_result gram_eigen(
    const Eigen::Ref<const mat_type>& a,
    std::size_t max_sweeps = default_jacobi_max_sweeps,
    value_t tol = default_jacobi_tol
)
{
    const index_t d = a.rows();
    if (a.cols() != d) {
        throw util::dimension_mismatch_error(
            "gram_eigen: matrix must be square, got " + std::to_string(a.rows())
            + "x" + std::to_string(a.cols()) + ".");
    }
    const value_t scale = std::max<value_t>(1, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw util::invalid_argument_error("gram_eigen: matrix is not symmetric.");
    }

    mat_type A = 0.5 * (a + a.transpose());
    mat_type V = mat_type::Identity(d, d);
    const value_t threshold = tol * A.norm();

    const auto off_norm = [&]() {
        value_t s = 0;
        for (index_t j = 0; j < d; ++j) {
            for (index_t i = 0; i < j; ++i) s += A(i, j) * A(i, j);
        }
        return std::sqrt(2 * s);
    };

    eigen_result out;
    while (off_norm() > threshold) {
        if (out.sweeps >= max_sweeps) {
            throw util::convergence_failure_error(
                "gram_eigen: off-diagonal norm did not fall below tolerance after "
                + std::to_string(max_sweeps) + " sweeps.");
        }
        for (index_t p = 0; p < d - 1; ++p) {
            for (index_t q = p + 1; q < d; ++q) {
                const value_t apq = A(p, q);
                if (apq == 0) continue;
                const value_t theta = (A(q, q) - A(p, p)) / (2 * apq);
                const value_t t = std::copysign(1.0, theta)
                    / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const value_t c = 1 / std::sqrt(t * t + 1);
                const value_t s = t * c;

                A(p, p) -= t * apq;
                A(q, q) += t * apq;
                A(p, q) = A(q, p) = 0;
                for (index_t r = 0; r < d; ++r) {
                    if (r == p || r == q) continue;
                    const value_t arp = A(r, p);
                    const value_t arq = A(r, q);
                    A(r, p) = A(p, r) = c * arp - s * arq;
                    A(r, q) = A(q, r) = s * arp + c * arq;
                }
                for (index_t r = 0; r < d; ++r) {
                    const value_t vrp = V(r, p);
                    const value_t vrq = V(r, q);
                    V(r, p) = c * vrp - s * vrq;
                    V(r, q) = s * vrp + c * vrq;
                }
            }
        }
        ++out.sweeps;
    }

    std::vector<index_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
        [&](index_t i, index_t j) { return A(i, i) > A(j, j); });

    out.Q.resize(d, d);
    out.lambda.resize(d);
    for (index_t k = 0; k < d; ++k) {
        out.Q.col(k) = V.col(order[k]);
        out.lambda[k] = std::max<value_t>(A(order[k], order[k]), 0);
    }
    return out;
}

} // namespace linalg
} // namespace grpnet
