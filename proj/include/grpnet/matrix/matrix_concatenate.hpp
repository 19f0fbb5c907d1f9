#pragma once
#include <algorithm>
#include <memory>
#include <vector>
#include <grpnet/matrix/matrix_base.hpp>

namespace grpnet {
namespace matrix {

/**
 * Column-wise concatenation [X_1 X_2 ... X_m] of matrices with equal rows.
 * Each query is split at part boundaries and delegated.
 */
class matrix_concatenate : public matrix_naive_base
{
    std::vector<std::shared_ptr<const matrix_naive_base>> _parts;
    std::vector<index_t> _offsets;  // size parts+1, _offsets.back() == cols
    index_t _rows = 0;

    // index of the part containing column j
    std::size_t part_of(index_t j) const
    {
        const auto it = std::upper_bound(_offsets.begin(), _offsets.end(), j);
        return static_cast<std::size_t>(it - _offsets.begin()) - 1;
    }

    template <class F>
    void for_each_piece(index_t j, index_t q, F&& f) const
    {
        index_t col = j;
        const index_t end = j + q;
        while (col < end) {
            const auto k = part_of(col);
            const index_t local = col - _offsets[k];
            const index_t len = std::min(end, _offsets[k + 1]) - col;
            f(k, local, len, col - j);
            col += len;
        }
    }

protected:
    void bmul_impl(index_t j, index_t q, const cref_vec_type& w, const cref_vec_type& r, ref_vec_type out) const override
    {
        for_each_piece(j, q, [&](std::size_t k, index_t local, index_t len, index_t pos) {
            _parts[k]->bmul(local, len, w, r, out.segment(pos, len));
        });
    }

    void btmul_impl(index_t j, index_t q, const cref_vec_type& u, ref_vec_type out) const override
    {
        for_each_piece(j, q, [&](std::size_t k, index_t local, index_t len, index_t pos) {
            _parts[k]->btmul(local, len, u.segment(pos, len), out);
        });
    }

    void gram_block_impl(index_t j, index_t q, const cref_vec_type& w, ref_mat_type out) const override
    {
        struct piece { std::size_t k; index_t local, len, pos; };
        std::vector<piece> pieces;
        for_each_piece(j, q, [&](std::size_t k, index_t local, index_t len, index_t pos) {
            pieces.push_back({k, local, len, pos});
        });
        for (const auto& a : pieces) {
            mat_type g(a.len, a.len);
            _parts[a.k]->gram_block(a.local, a.len, w, g);
            out.block(a.pos, a.pos, a.len, a.len) = g;
        }
        // cross-part blocks: X_a^T W X_b via column expansion of X_b
        vec_type col(_rows);
        vec_type unit(1);
        unit[0] = 1;
        vec_type buf;
        for (std::size_t ia = 0; ia < pieces.size(); ++ia) {
            for (std::size_t ib = ia + 1; ib < pieces.size(); ++ib) {
                const auto& a = pieces[ia];
                const auto& b = pieces[ib];
                buf.resize(a.len);
                for (index_t c = 0; c < b.len; ++c) {
                    col.setZero();
                    _parts[b.k]->btmul(b.local + c, 1, unit, col);
                    _parts[a.k]->bmul(a.local, a.len, w, col, buf);
                    out.block(a.pos, b.pos + c, a.len, 1) = buf;
                    out.block(b.pos + c, a.pos, 1, a.len) = buf.transpose();
                }
            }
        }
    }

public:
    explicit matrix_concatenate(std::vector<std::shared_ptr<const matrix_naive_base>> parts)
        : _parts(std::move(parts))
    {
        if (_parts.empty()) {
            throw util::invalid_argument_error("matrix_concatenate: need at least one part.");
        }
        _rows = _parts.front()->rows();
        _offsets.push_back(0);
        for (const auto& p : _parts) {
            if (!p) throw util::invalid_argument_error("matrix_concatenate: null part.");
            if (p->rows() != _rows) {
                throw util::dimension_mismatch_error(
                    "matrix_concatenate: parts must have equal row counts ("
                    + std::to_string(p->rows()) + " vs " + std::to_string(_rows) + ").");
            }
            _offsets.push_back(_offsets.back() + p->cols());
        }
    }

    index_t rows() const override { return _rows; }
    index_t cols() const override { return _offsets.back(); }
    std::size_t n_parts() const { return _parts.size(); }
};

} // namespace matrix
} // namespace grpnet
