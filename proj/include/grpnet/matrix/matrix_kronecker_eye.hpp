#pragma once
#include <memory>
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace matrix {

/**
 * Represents X (x) I_c for a base matrix X of shape n x p.
 * Row i*c + k and column j*c + l hold X(i, j) when k == l and 0 otherwise,
 * so the c coefficients of feature j are the contiguous columns [j*c, j*c + c).
 */
class matrix_kronecker_eye : public matrix_naive_base
{
    std::shared_ptr<const matrix_naive_base> _base;
    index_t _c;

    vec_type strided(const cref_vec_type& x, index_t l) const
    {
        const index_t n = _base->rows();
        vec_type out(n);
        for (index_t i = 0; i < n; ++i) out[i] = x[i * _c + l];
        return out;
    }

protected:
    void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const override
    {
        if (q == 0) return;
        const index_t jb = j / _c;
        const index_t je = (j + q - 1) / _c + 1;
        vec_type buf(je - jb);
        for (index_t l = 0; l < _c; ++l) {
            const vec_type wl = strided(w, l);
            const vec_type rl = strided(r, l);
            _base->bmul(jb, je - jb, wl, rl, buf);
            for (index_t jj = jb; jj < je; ++jj) {
                const index_t col = jj * _c + l;
                if (col >= j && col < j + q) out[col - j] = buf[jj - jb];
            }
        }
    }

    void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const override
    {
        if (q == 0) return;
        const index_t n = _base->rows();
        const index_t jb = j / _c;
        const index_t je = (j + q - 1) / _c + 1;
        vec_type ul(je - jb);
        vec_type tmp(n);
        for (index_t l = 0; l < _c; ++l) {
            bool any = false;
            for (index_t jj = jb; jj < je; ++jj) {
                const index_t col = jj * _c + l;
                ul[jj - jb] = (col >= j && col < j + q) ? u[col - j] : 0;
                any = any || ul[jj - jb] != 0;
            }
            if (!any) continue;
            tmp.setZero();
            _base->btmul(jb, je - jb, ul, tmp);
            for (index_t i = 0; i < n; ++i) out[i * _c + l] += tmp[i];
        }
    }

    void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const override
    {
        out.setZero();
        if (q == 0) return;
        const index_t jb = j / _c;
        const index_t je = (j + q - 1) / _c + 1;
        mat_type g(je - jb, je - jb);
        for (index_t l = 0; l < _c; ++l) {
            const vec_type wl = strided(w, l);
            _base->gram_block(jb, je - jb, wl, g);
            for (index_t a = 0; a < q; ++a) {
                const index_t ca = j + a;
                if (ca % _c != l) continue;
                for (index_t b = 0; b < q; ++b) {
                    const index_t cb = j + b;
                    if (cb % _c != l) continue;
                    out(a, b) = g(ca / _c - jb, cb / _c - jb);
                }
            }
        }
    }

public:
    matrix_kronecker_eye(std::shared_ptr<const matrix_naive_base> base, index_t c)
        : _base(std::move(base)), _c(c)
    {
        if (!_base) throw util::invalid_argument_error("matrix_kronecker_eye: null base.");
        if (c < 1) throw util::invalid_argument_error("matrix_kronecker_eye: c must be >= 1.");
    }

    index_t rows() const override { return _base->rows() * _c; }
    index_t cols() const override { return _base->cols() * _c; }
    index_t classes() const { return _c; }
};

} // namespace matrix
} // namespace grpnet
