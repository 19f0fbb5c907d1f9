#pragma once
#include <memory>
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace matrix {

/**
 * Column-centered view X - 1 m^T of a base matrix without materializing it.
 */
class matrix_centered : public matrix_naive_base
{
    std::shared_ptr<const matrix_naive_base> _base;
    vec_type _centers;

protected:
    void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const override
    {
        _base->bmul(j, q, w, r, out);
        out -= _centers.segment(j, q) * w.dot(r);
    }

    void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const override
    {
        _base->btmul(j, q, u, out);
        out.array() -= _centers.segment(j, q).dot(u);
    }

    void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const override
    {
        _base->gram_block(j, q, w, out);
        const vec_type ones = vec_type::Ones(_base->rows());
        vec_type s(q);
        _base->bmul(j, q, w, ones, s);
        const auto m = _centers.segment(j, q);
        out -= m * s.transpose() + s * m.transpose();
        out += w.sum() * m * m.transpose();
    }

public:
    matrix_centered(std::shared_ptr<const matrix_naive_base> base, vec_type centers)
        : _base(std::move(base)), _centers(std::move(centers))
    {
        if (!_base) throw util::invalid_argument_error("matrix_centered: null base.");
        if (_centers.size() != _base->cols()) {
            throw util::dimension_mismatch_error("matrix_centered: centers length must equal cols.");
        }
    }

    index_t rows() const override { return _base->rows(); }
    index_t cols() const override { return _base->cols(); }
    const vec_type& centers() const { return _centers; }
};

/// Weighted column means X^T w / sum(w).
inline vec_type weighted_column_means(const matrix_naive_base& X, const cref_vec_type& w)
{
    vec_type out(X.cols());
    X.bmul(0, X.cols(), w, vec_type::Ones(X.rows()), out);
    return out / w.sum();
}

} // namespace matrix
} // namespace grpnet
