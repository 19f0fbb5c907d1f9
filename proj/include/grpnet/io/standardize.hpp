#pragma once
#include <cmath>
#include <vector>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace io {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;

/**
 * Weighted centering and scaling of the columns of X (and centering and
 * scaling of y). Constant columns keep scale 1 and are flagged.
 */
struct standardization
{
    vec_type x_center;
    vec_type x_scale;
    std::vector<char> constant;
    value_t y_center = 0;
    value_t y_scale = 1;

    /// Maps coefficients fitted on the standardized scale back to the original scale.
    vec_type coef_to_original(const util::cref_vec_type& beta_std) const
    {
        return y_scale * beta_std.cwiseQuotient(x_scale);
    }

    /// Intercept on the original scale for standardized coefficients and intercept.
    value_t intercept_to_original(const util::cref_vec_type& beta_std, value_t b0_std) const
    {
        return y_center + y_scale * b0_std - x_center.dot(coef_to_original(beta_std));
    }
};

inline constexpr value_t constant_column_tol = 1e-12;

/**
 * Standardizes X in place (and y when non-null) under normalized weights w.
 * With center = false only the scales are applied (root weighted mean square).
 */
inline standardization standardize(mat_type& X, vec_type* y, const vec_type& w, bool scale_y = true, bool center = true)
{
    const index_t n = X.rows();
    if (w.size() != n) throw util::dimension_mismatch_error("standardize: weights length must equal rows.");
    const vec_type wn = w / w.sum();
    standardization s;
    s.x_center = center ? vec_type(X.transpose() * wn) : vec_type::Zero(X.cols());
    s.x_scale.resize(X.cols());
    s.constant.assign(X.cols(), 0);
    for (index_t j = 0; j < X.cols(); ++j) {
        X.col(j).array() -= s.x_center[j];
        const value_t sd = std::sqrt(wn.dot(X.col(j).cwiseAbs2()));
        if (sd <= constant_column_tol * std::max<value_t>(1, std::abs(s.x_center[j]))) {
            s.x_scale[j] = 1;
            s.constant[j] = 1;
        } else {
            s.x_scale[j] = sd;
            X.col(j) /= sd;
        }
    }
    if (y) {
        if (y->size() != n) throw util::dimension_mismatch_error("standardize: response length must equal rows.");
        s.y_center = center ? wn.dot(*y) : 0;
        y->array() -= s.y_center;
        const value_t sd = std::sqrt(wn.dot(y->cwiseAbs2()));
        s.y_scale = scale_y && sd > constant_column_tol ? sd : 1;
        *y /= s.y_scale;
    }
    return s;
}

} // namespace io
} // namespace grpnet
