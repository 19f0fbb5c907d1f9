#pragma once
#include <string>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace matrix {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;
using util::sp_vec_type;
using util::ref_vec_type;
using util::cref_vec_type;
using util::ref_mat_type;

/**
 * Feature matrix interface used by the solvers.
 *
 * The solvers only touch X through column-block inner products, so any
 * structured representation can be plugged in by implementing the four
 * protected hooks. The public methods validate dimensions and forward.
 * Implementations are immutable after construction; concurrent calls are
 * safe as long as each caller owns its output buffers.
 */
class matrix_naive_base
{
protected:
    virtual void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const = 0;
    virtual void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const = 0;
    virtual void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const = 0;

    void check_block(const char* name, index_t j, index_t q) const
    {
        if (j < 0 || q < 0 || j + q > cols()) {
            throw util::dimension_mismatch_error(
                std::string(name) + ": block [" + std::to_string(j) + ", " + std::to_string(j + q)
                + ") out of range for " + std::to_string(cols()) + " columns.");
        }
    }

    void check_len(const char* name, const char* what, index_t got, index_t expected) const
    {
        if (got != expected) {
            throw util::dimension_mismatch_error(
                std::string(name) + ": " + what + " has length " + std::to_string(got)
                + ", expected " + std::to_string(expected) + ".");
        }
    }

public:
    virtual ~matrix_naive_base() = default;

    virtual index_t rows() const = 0;
    virtual index_t cols() const = 0;

    /// out = X[:, j:j+q]^T diag(w) r
    void bmul(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const
    {
        check_block("bmul", j, q);
        check_len("bmul", "w", w.size(), rows());
        check_len("bmul", "r", r.size(), rows());
        check_len("bmul", "out", out.size(), q);
        bmul_impl(j, q, w, r, out);
    }

    /// out += X[:, j:j+q] u
    void btmul(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const
    {
        check_block("btmul", j, q);
        check_len("btmul", "u", u.size(), q);
        check_len("btmul", "out", out.size(), rows());
        btmul_impl(j, q, u, out);
    }

    /// out = X[:, j:j+q]^T diag(w) X[:, j:j+q]
    void gram_block(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const
    {
        check_block("gram_block", j, q);
        check_len("gram_block", "w", w.size(), rows());
        if (out.rows() != q || out.cols() != q) {
            throw util::dimension_mismatch_error("gram_block: output must be " + std::to_string(q)
                + "x" + std::to_string(q) + ".");
        }
        gram_block_impl(j, q, w, out);
    }

    /// out = X beta, accumulated over the nonzero entries of beta.
    void mul(const sp_vec_type& beta, ref_vec_type out) const
    {
        check_len("mul", "beta", beta.size(), cols());
        check_len("mul", "out", out.size(), rows());
        out.setZero();
        vec_type one(1);
        for (sp_vec_type::InnerIterator it(beta); it; ++it) {
            one[0] = it.value();
            btmul_impl(it.index(), 1, one, out);
        }
    }

    /// Dense convenience overload of mul.
    void mul(const cref_vec_type& beta, ref_vec_type out) const
    {
        check_len("mul", "beta", beta.size(), cols());
        check_len("mul", "out", out.size(), rows());
        out.setZero();
        vec_type one(1);
        for (index_t k = 0; k < beta.size(); ++k) {
            if (beta[k] == 0) continue;
            one[0] = beta[k];
            btmul_impl(k, 1, one, out);
        }
    }

    /// out = X^T diag(w) X[:, j:j+q], a cols() x q block. Used by covariance updates.
    void cov_block(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const
    {
        check_block("cov_block", j, q);
        check_len("cov_block", "w", w.size(), rows());
        if (out.rows() != cols() || out.cols() != q) {
            throw util::dimension_mismatch_error("cov_block: output has wrong shape.");
        }
        vec_type col(rows());
        vec_type unit(1);
        unit[0] = 1;
        for (index_t k = 0; k < q; ++k) {
            col.setZero();
            btmul_impl(j + k, 1, unit, col);
            bmul_impl(0, cols(), w, col, out.col(k));
        }
    }
};

} // namespace matrix
} // namespace grpnet
