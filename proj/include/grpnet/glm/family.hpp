#pragma once
#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <string>
#include <grpnet/util/exceptions.hpp>
#include <grpnet/util/types.hpp>

namespace grpnet {
namespace glm {

using util::value_t;
using util::index_t;
using util::vec_type;
using util::mat_type;
using util::cref_vec_type;
using util::ref_vec_type;

inline constexpr value_t default_hessian_floor = 1e-12;
inline constexpr value_t default_poisson_eta_cap = 30;

/// Elementwise max(h, floor).
inline vec_type apply_hessian_floor(const cref_vec_type& h, value_t floor = default_hessian_floor)
{
    return h.cwiseMax(floor);
}

/// log(1 + exp(x)) without overflow.
inline value_t log1p_exp(value_t x)
{
    return std::max<value_t>(x, 0) + std::log1p(std::exp(-std::abs(x)));
}

inline value_t sigmoid(value_t x)
{
    if (x >= 0) return 1 / (1 + std::exp(-x));
    const value_t e = std::exp(x);
    return e / (1 + e);
}

/**
 * Loss l(eta) of an exponential family with its gradient and a positive
 * diagonal hessian majorizer. Response and observation weights are captured
 * at construction. Multi-response families work on the flattened linear
 * predictor: cell (i, j) of the n x c matrix sits at index i * c + j.
 */
class glm_base
{
protected:
    std::string _name;
    vec_type _y;
    vec_type _w;
    index_t _c;

    glm_base(std::string name, vec_type y, vec_type w, index_t c)
        : _name(std::move(name)), _y(std::move(y)), _w(std::move(w)), _c(c)
    {
        if (_c < 1) throw util::invalid_argument_error(_name + ": classes must be >= 1.");
        if (_y.size() != _w.size() * _c) {
            throw util::dimension_mismatch_error(
                _name + ": response has " + std::to_string(_y.size()) + " entries, expected "
                + std::to_string(_w.size() * _c) + ".");
        }
        if (!(_w.array() >= 0).all() || !_w.allFinite()) {
            throw util::invalid_argument_error(_name + ": weights must be nonnegative and finite.");
        }
    }

    void check_eta(const cref_vec_type& eta) const
    {
        if (eta.size() != _y.size()) {
            throw util::dimension_mismatch_error(
                _name + ": eta has length " + std::to_string(eta.size()) + ", expected "
                + std::to_string(_y.size()) + ".");
        }
    }

    virtual value_t loss_impl(const cref_vec_type& eta) const = 0;
    virtual void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const = 0;
    virtual void hessian_impl(const cref_vec_type& eta, ref_vec_type out) const = 0;

public:
    virtual ~glm_base() = default;

    const std::string& name() const { return _name; }
    bool is_multi() const { return _name == "multigaussian" || _name == "multinomial"; }
    index_t classes() const { return _c; }
    index_t observations() const { return _w.size(); }
    /// Length of the flattened linear predictor, observations() * classes().
    index_t size() const { return _y.size(); }
    const vec_type& y() const { return _y; }
    const vec_type& weights() const { return _w; }

    value_t loss(const cref_vec_type& eta) const
    {
        check_eta(eta);
        return loss_impl(eta);
    }

    void gradient(const cref_vec_type& eta, ref_vec_type out) const
    {
        check_eta(eta);
        check_eta(out);
        gradient_impl(eta, out);
    }

    /// Diagonal hessian majorizer before flooring.
    void hessian(const cref_vec_type& eta, ref_vec_type out) const
    {
        check_eta(eta);
        check_eta(out);
        hessian_impl(eta, out);
    }

    vec_type gradient(const cref_vec_type& eta) const
    {
        vec_type out(size());
        gradient(eta, out);
        return out;
    }

    vec_type hessian(const cref_vec_type& eta) const
    {
        vec_type out(size());
        hessian(eta, out);
        return out;
    }
};

/// l = 1/2 (||y - eta||_W^2 - ||y||_W^2)
class glm_gaussian : public glm_base
{
protected:
    value_t loss_impl(const cref_vec_type& eta) const override
    {
        return 0.5 * (_w.array() * ((_y - eta).array().square() - _y.array().square())).sum();
    }
    void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        out = _w.cwiseProduct(eta - _y);
    }
    void hessian_impl(const cref_vec_type&, ref_vec_type out) const override { out = _w; }

public:
    glm_gaussian(vec_type y, vec_type w) : glm_base("gaussian", std::move(y), std::move(w), 1) {}
};

/// l = sum_i w_i (-y_i eta_i + log(1 + exp(eta_i))), y in [0, 1].
class glm_binomial : public glm_base
{
protected:
    value_t loss_impl(const cref_vec_type& eta) const override
    {
        value_t out = 0;
        for (index_t i = 0; i < eta.size(); ++i) out += _w[i] * (-_y[i] * eta[i] + log1p_exp(eta[i]));
        return out;
    }
    void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        for (index_t i = 0; i < eta.size(); ++i) out[i] = -_w[i] * (_y[i] - sigmoid(eta[i]));
    }
    void hessian_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        for (index_t i = 0; i < eta.size(); ++i) out[i] = _w[i] * sigmoid(eta[i]) * sigmoid(-eta[i]);
    }

public:
    glm_binomial(vec_type y, vec_type w) : glm_base("binomial", std::move(y), std::move(w), 1)
    {
        if (!(_y.array() >= 0).all() || !(_y.array() <= 1).all()) {
            throw util::invalid_argument_error("binomial: response must lie in [0, 1].");
        }
    }
};

/**
 * l = sum_i w_i (-y_i eta_i + exp(eta_i)), y >= 0. eta is clipped at
 * eta_cap before exponentiation; clip_count() reports how often that happened.
 */
class glm_poisson : public glm_base
{
    value_t _cap;
    mutable std::atomic<std::size_t> _clips{0};

    value_t mean(value_t eta) const
    {
        if (eta > _cap) {
            ++_clips;
            eta = _cap;
        }
        return std::exp(eta);
    }

protected:
    value_t loss_impl(const cref_vec_type& eta) const override
    {
        value_t out = 0;
        for (index_t i = 0; i < eta.size(); ++i) out += _w[i] * (-_y[i] * eta[i] + mean(eta[i]));
        return out;
    }
    void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        for (index_t i = 0; i < eta.size(); ++i) out[i] = _w[i] * (mean(eta[i]) - _y[i]);
    }
    void hessian_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        for (index_t i = 0; i < eta.size(); ++i) out[i] = _w[i] * mean(eta[i]);
    }

public:
    glm_poisson(vec_type y, vec_type w, value_t eta_cap = default_poisson_eta_cap)
        : glm_base("poisson", std::move(y), std::move(w), 1), _cap(eta_cap)
    {
        if (!(_y.array() >= 0).all()) throw util::invalid_argument_error("poisson: response must be >= 0.");
    }

    std::size_t clip_count() const { return _clips.load(); }
};

/// Flattens an n x c matrix row by row (index i * c + j).
inline vec_type flatten_rows(const mat_type& m)
{
    vec_type out(m.size());
    for (index_t i = 0; i < m.rows(); ++i)
        for (index_t j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
    return out;
}

/// Inverse of flatten_rows.
inline mat_type unflatten_rows(const cref_vec_type& v, index_t c)
{
    if (c < 1 || v.size() % c) throw util::dimension_mismatch_error("unflatten_rows: length not divisible by c.");
    const index_t n = v.size() / c;
    mat_type out(n, c);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j < c; ++j) out(i, j) = v[i * c + j];
    return out;
}

/// Per-cell Gaussian loss with the row weight shared across the c responses.
class glm_multigaussian : public glm_base
{
protected:
    value_t loss_impl(const cref_vec_type& eta) const override
    {
        value_t out = 0;
        for (index_t k = 0; k < eta.size(); ++k) {
            out += _w[k / _c] * ((_y[k] - eta[k]) * (_y[k] - eta[k]) - _y[k] * _y[k]);
        }
        return 0.5 * out;
    }
    void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        for (index_t k = 0; k < eta.size(); ++k) out[k] = _w[k / _c] * (eta[k] - _y[k]);
    }
    void hessian_impl(const cref_vec_type&, ref_vec_type out) const override
    {
        for (index_t k = 0; k < out.size(); ++k) out[k] = _w[k / _c];
    }

public:
    glm_multigaussian(const mat_type& y, vec_type w)
        : glm_base("multigaussian", flatten_rows(y), std::move(w), y.cols())
    {}
};

/**
 * l = sum_i w_i (-sum_j y_ij eta_ij + log sum_j exp(eta_ij)) with rows of y
 * on the simplex. The majorizer is 2 diag of the true hessian.
 */
class glm_multinomial : public glm_base
{
    void softmax_row(const cref_vec_type& eta, index_t i, value_t* p, value_t& lse) const
    {
        value_t m = eta[i * _c];
        for (index_t j = 1; j < _c; ++j) m = std::max(m, eta[i * _c + j]);
        value_t s = 0;
        for (index_t j = 0; j < _c; ++j) {
            p[j] = std::exp(eta[i * _c + j] - m);
            s += p[j];
        }
        for (index_t j = 0; j < _c; ++j) p[j] /= s;
        lse = m + std::log(s);
    }

protected:
    value_t loss_impl(const cref_vec_type& eta) const override
    {
        vec_type p(_c);
        value_t out = 0, lse;
        for (index_t i = 0; i < _w.size(); ++i) {
            softmax_row(eta, i, p.data(), lse);
            value_t dot = 0;
            for (index_t j = 0; j < _c; ++j) dot += _y[i * _c + j] * eta[i * _c + j];
            out += _w[i] * (lse - dot);
        }
        return out;
    }
    void gradient_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        vec_type p(_c);
        value_t lse;
        for (index_t i = 0; i < _w.size(); ++i) {
            softmax_row(eta, i, p.data(), lse);
            for (index_t j = 0; j < _c; ++j) out[i * _c + j] = _w[i] * (p[j] - _y[i * _c + j]);
        }
    }
    void hessian_impl(const cref_vec_type& eta, ref_vec_type out) const override
    {
        vec_type p(_c);
        value_t lse;
        for (index_t i = 0; i < _w.size(); ++i) {
            softmax_row(eta, i, p.data(), lse);
            for (index_t j = 0; j < _c; ++j) out[i * _c + j] = 2 * _w[i] * p[j] * (1 - p[j]);
        }
    }

public:
    glm_multinomial(const mat_type& y, vec_type w)
        : glm_base("multinomial", flatten_rows(y), std::move(w), y.cols())
    {
        if (!(y.array() >= 0).all()) throw util::invalid_argument_error("multinomial: response must be >= 0.");
        for (index_t i = 0; i < y.rows(); ++i) {
            if (std::abs(y.row(i).sum() - 1) > 1e-8) {
                throw util::invalid_argument_error("multinomial: response rows must sum to 1.");
            }
        }
    }

    /// Row-softmax probabilities, n x c.
    mat_type probabilities(const cref_vec_type& eta) const
    {
        check_eta(eta);
        mat_type out(_w.size(), _c);
        vec_type p(_c);
        value_t lse;
        for (index_t i = 0; i < _w.size(); ++i) {
            softmax_row(eta, i, p.data(), lse);
            out.row(i) = p.transpose();
        }
        return out;
    }
};

/**
 * Builds a family by name. Single-response families take y as an n x 1
 * matrix; multi-response families take the n x c response matrix.
 */
inline std::shared_ptr<glm_base> make_family(const std::string& name, const mat_type& y, const vec_type& w)
{
    const auto col = [&]() -> vec_type {
        if (y.cols() != 1) {
            throw util::dimension_mismatch_error(name + ": expected a single response column, got "
                + std::to_string(y.cols()) + ".");
        }
        return y.col(0);
    };
    if (name == "gaussian") return std::make_shared<glm_gaussian>(col(), w);
    if (name == "binomial") return std::make_shared<glm_binomial>(col(), w);
    if (name == "poisson") return std::make_shared<glm_poisson>(col(), w);
    if (name == "multigaussian") return std::make_shared<glm_multigaussian>(y, w);
    if (name == "multinomial") return std::make_shared<glm_multinomial>(y, w);
    throw util::invalid_argument_error("unknown family '" + name
        + "' (expected gaussian, binomial, poisson, multigaussian or multinomial).");
}

} // namespace glm
} // namespace grpnet
