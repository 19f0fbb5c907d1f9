#pragma once
#include <cstddef>
#include <vector>
#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace grpnet {
namespace util {

using value_t = double;
using index_t = Eigen::Index;

using vec_type = Eigen::Matrix<value_t, Eigen::Dynamic, 1>;
using mat_type = Eigen::Matrix<value_t, Eigen::Dynamic, Eigen::Dynamic>;
using rowmat_type = Eigen::Matrix<value_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using sp_vec_type = Eigen::SparseVector<value_t>;
using sp_mat_type = Eigen::SparseMatrix<value_t, Eigen::ColMajor>;

using ref_vec_type = Eigen::Ref<vec_type>;
using cref_vec_type = Eigen::Ref<const vec_type>;
using ref_mat_type = Eigen::Ref<mat_type>;
using cref_mat_type = Eigen::Ref<const mat_type>;

} // namespace util
} // namespace grpnet
