#pragma once
#include <vector>
#include <grpnet/matrix/matrix_base.hpp>
#include <grpnet/util/threads.hpp>

namespace grpnet {
namespace matrix {

/**
 * Per-group norms ||X_g^T W r||_2 for every group.
 * Groups are split into contiguous chunks across n_threads workers.
 */
inline vec_type score_all_groups(
    const matrix_naive_base& X,
    const std::vector<index_t>& group_starts,
    const std::vector<index_t>& group_sizes,
    const cref_vec_type& w,
    const cref_vec_type& r,
    std::size_t n_threads = 1
)
{
    if (group_starts.size() != group_sizes.size()) {
        throw util::dimension_mismatch_error("score_all_groups: starts and sizes differ in length.");
    }
    const std::size_t G = group_starts.size();
    vec_type out(G);
    util::parallel_chunks(G, n_threads, [&](std::size_t b, std::size_t e) {
        const index_t j = group_starts[b];
        const index_t q = group_starts[e - 1] + group_sizes[e - 1] - j;
        vec_type grad(q);
        X.bmul(j, q, w, r, grad);
        for (std::size_t g = b; g < e; ++g) {
            out[g] = grad.segment(group_starts[g] - j, group_sizes[g]).norm();
        }
    });
    return out;
}

} // namespace matrix
} // namespace grpnet
