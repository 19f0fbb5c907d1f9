#pragma once
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace matrix {

/// Compressed-column feature matrix.
class matrix_sparse : public matrix_naive_base
{
    util::sp_mat_type _X;

protected:
    void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const override
    {
        for (index_t k = 0; k < q; ++k) {
            value_t sum = 0;
            for (util::sp_mat_type::InnerIterator it(_X, j + k); it; ++it) {
                sum += it.value() * w[it.row()] * r[it.row()];
            }
            out[k] = sum;
        }
    }

    void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const override
    {
        for (index_t k = 0; k < q; ++k) {
            if (u[k] == 0) continue;
            for (util::sp_mat_type::InnerIterator it(_X, j + k); it; ++it) {
                out[it.row()] += it.value() * u[k];
            }
        }
    }

    void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const override
    {
        const util::sp_mat_type Xg = _X.middleCols(j, q);
        out = mat_type(Xg.transpose() * w.asDiagonal() * Xg);
    }

public:
    explicit matrix_sparse(util::sp_mat_type X) : _X(std::move(X)) { _X.makeCompressed(); }

    index_t rows() const override { return _X.rows(); }
    index_t cols() const override { return _X.cols(); }
};

} // namespace matrix
} // namespace grpnet
