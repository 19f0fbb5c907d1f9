#pragma once
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace matrix {

class matrix_dense : public matrix_naive_base
{
    mat_type _X;

protected:
    void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const override
    {
        out.noalias() = _X.middleCols(j, q).transpose() * w.cwiseProduct(r);
    }

    void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const override
    {
        out.noalias() += _X.middleCols(j, q) * u;
    }

    void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const override
    {
        const auto Xg = _X.middleCols(j, q);
        out.noalias() = Xg.transpose() * w.asDiagonal() * Xg;
    }

public:
    explicit matrix_dense(mat_type X) : _X(std::move(X)) {}

    index_t rows() const override { return _X.rows(); }
    index_t cols() const override { return _X.cols(); }
    const mat_type& data() const { return _X; }
};

} // namespace matrix
} // namespace grpnet
