#include <gtest/gtest.h>
#include <Eigen/Eigenvalues>
#include <grpnet/glm/family.hpp>
#include "test_util.hpp"

namespace {

using namespace grpnet;
using namespace grpnet::glm;
using util::index_t;
using util::mat_type;
using util::vec_type;
using util::value_t;

vec_type vec(std::initializer_list<value_t> l)
{
    vec_type out(l.size());
    index_t i = 0;
    for (auto x : l) out[i++] = x;
    return out;
}

// Central finite differences of the loss against the analytic gradient.
value_t gradient_fd_error(const glm_base& f, const vec_type& eta)
{
    const vec_type g = f.gradient(eta);
    value_t worst = 0;
    for (index_t k = 0; k < eta.size(); ++k) {
        const value_t h = 1e-5 * std::max<value_t>(1, std::abs(eta[k]));
        vec_type a = eta, b = eta;
        a[k] += h;
        b[k] -= h;
        const value_t fd = (f.loss(a) - f.loss(b)) / (2 * h);
        worst = std::max(worst, std::abs(fd - g[k]) / std::max<value_t>(std::abs(g[k]), 1e-3));
    }
    return worst;
}

// Central finite differences of the gradient against the diagonal hessian.
value_t hessian_fd_error(const glm_base& f, const vec_type& eta)
{
    const vec_type h = f.hessian(eta);
    value_t worst = 0;
    for (index_t k = 0; k < eta.size(); ++k) {
        const value_t d = 1e-5 * std::max<value_t>(1, std::abs(eta[k]));
        vec_type a = eta, b = eta;
        a[k] += d;
        b[k] -= d;
        const value_t fd = (f.gradient(a)[k] - f.gradient(b)[k]) / (2 * d);
        worst = std::max(worst, std::abs(fd - h[k]) / std::max<value_t>(std::abs(h[k]), 1e-3));
    }
    return worst;
}

TEST(HessianFloor, Examples)
{
    const vec_type f = apply_hessian_floor(vec({0, 0.3}));
    EXPECT_EQ(f[0], 1e-12);
    EXPECT_EQ(f[1], 0.3);
    const vec_type above = vec({0.1, 2});
    EXPECT_EQ(apply_hessian_floor(above), above);
    EXPECT_EQ(apply_hessian_floor(f), f);
}

TEST(Gaussian, Values)
{
    const vec_type y = vec({1, -2, 3});
    const vec_type w = vec_type::Constant(3, 1.0 / 3);
    const glm_gaussian f(y, w);
    EXPECT_EQ(f.gradient(y).cwiseAbs().maxCoeff(), 0);
    EXPECT_NEAR(f.loss(y), -0.5 * w.dot(y.cwiseProduct(y)), 1e-15);
    EXPECT_EQ(f.hessian(y), w);
    std::mt19937_64 gen(1);
    const vec_type eta = test_util::randn(3, gen);
    EXPECT_LE(gradient_fd_error(f, eta), 1e-5);
    EXPECT_LE(hessian_fd_error(f, eta), 1e-5);
}

TEST(Binomial, Values)
{
    const glm_binomial f(vec({1}), vec({1}));
    EXPECT_DOUBLE_EQ(f.gradient(vec({0}))[0], -0.5);
    EXPECT_DOUBLE_EQ(f.hessian(vec({0}))[0], 0.25);

    const glm_binomial g(vec({0}), vec({1}));
    const value_t l = g.loss(vec({35}));
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_NEAR(l, 35, 1e-12);
    const value_t h = g.hessian(vec({35}))[0];
    EXPECT_NEAR(h, std::exp(-35.0), 1e-20);
    EXPECT_NEAR(h, 6.3e-16, 0.05e-16);
    EXPECT_TRUE(std::isfinite(g.loss(vec({1000}))));
    EXPECT_TRUE(std::isfinite(g.loss(vec({-1000}))));
}

TEST(Binomial, StationaryAtMean)
{
    std::mt19937_64 gen(2);
    const vec_type eta = test_util::randn(6, gen);
    vec_type y(6);
    for (index_t i = 0; i < 6; ++i) y[i] = sigmoid(eta[i]);
    const glm_binomial f(y, vec_type::Constant(6, 1.0 / 6));
    EXPECT_LE(f.gradient(eta).cwiseAbs().maxCoeff(), 1e-17);
    EXPECT_LE(gradient_fd_error(f, 3 * eta), 1e-5);
    EXPECT_LE(hessian_fd_error(f, 3 * eta), 1e-5);
}

TEST(Binomial, RejectsBadResponse)
{
    EXPECT_THROW(glm_binomial(vec({1.5}), vec({1})), util::invalid_argument_error);
}

TEST(Poisson, Values)
{
    const glm_poisson f(vec({1}), vec({1}));
    EXPECT_DOUBLE_EQ(f.gradient(vec({0}))[0], 0);
    EXPECT_DOUBLE_EQ(f.hessian(vec({0}))[0], 1);
    std::mt19937_64 gen(3);
    const vec_type eta = test_util::randn(8, gen);
    const vec_type y = eta.array().exp();
    const glm_poisson g(y, vec_type::Constant(8, 1.0 / 8));
    EXPECT_LE(g.gradient(eta).cwiseAbs().maxCoeff(), 1e-15);
    const glm_poisson h(test_util::runif(8, 0, 5, gen), vec_type::Constant(8, 1.0 / 8));
    EXPECT_LE(gradient_fd_error(h, eta), 1e-5);
    EXPECT_LE(hessian_fd_error(h, eta), 1e-5);
}

TEST(Poisson, ClipsLargeEta)
{
    const glm_poisson f(vec({1}), vec({1}));
    EXPECT_EQ(f.clip_count(), 0u);
    const value_t h = f.hessian(vec({500}))[0];
    EXPECT_DOUBLE_EQ(h, std::exp(30.0));
    EXPECT_GT(f.clip_count(), 0u);
}

TEST(Multinomial, TwoClassMatchesSigmoid)
{
    std::mt19937_64 gen(4);
    const mat_type eta = test_util::randn(5, 2, gen);
    mat_type y = mat_type::Zero(5, 2);
    y.col(0).setOnes();
    const glm_multinomial f(y, vec_type::Constant(5, 0.2));
    const mat_type p = f.probabilities(flatten_rows(eta));
    for (index_t i = 0; i < 5; ++i) EXPECT_NEAR(p(i, 0), sigmoid(eta(i, 0) - eta(i, 1)), 1e-15);
}

TEST(Multinomial, UniformRow)
{
    mat_type y(1, 3);
    y << 1, 0, 0;
    const glm_multinomial f(y, vec({0.5}));
    const vec_type h = f.hessian(vec_type::Zero(3));
    for (index_t j = 0; j < 3; ++j) EXPECT_NEAR(h[j], 2 * 0.5 * 2.0 / 9, 1e-15);
}

TEST(Multinomial, CalculusAndInvariances)
{
    std::mt19937_64 gen(5);
    for (index_t c : {2, 3, 5}) {
        const index_t n = 6;
        mat_type y = test_util::runif(n * c, 0, 1, gen).reshaped(n, c);
        for (index_t i = 0; i < n; ++i) y.row(i) /= y.row(i).sum();
        const vec_type w = test_util::runif(n, 0.1, 1, gen);
        const glm_multinomial f(y, w / w.sum());
        const vec_type eta = 2 * test_util::randn(n * c, gen);
        EXPECT_LE(gradient_fd_error(f, eta), 1e-5);
        const mat_type g = unflatten_rows(f.gradient(eta), c);
        EXPECT_LE(g.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
        vec_type shifted = eta;
        for (index_t i = 0; i < n; ++i)
            for (index_t j = 0; j < c; ++j) shifted[i * c + j] += 3.0 * i - 1;
        EXPECT_NEAR(f.loss(shifted), f.loss(eta), 1e-12);
        EXPECT_TRUE((apply_hessian_floor(f.hessian(eta)).array() > 0).all());
    }
}

TEST(Multinomial, MajorizerDominatesHessian)
{
    std::mt19937_64 gen(6);
    value_t worst = 0;
    for (int t = 0; t < 1000; ++t) {
        const index_t c = 2 + t % 4;
        const vec_type eta = 3 * test_util::randn(c, gen);
        const vec_type p = (eta.array() - eta.maxCoeff()).exp();
        const vec_type pn = p / p.sum();
        const value_t w = test_util::runif(1, 0.01, 1, gen)[0];
        const mat_type H = w * (mat_type(pn.asDiagonal()) - pn * pn.transpose());
        const mat_type D = 2 * mat_type(H.diagonal().asDiagonal()) - H;
        Eigen::SelfAdjointEigenSolver<mat_type> es(D);
        worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    EXPECT_GE(worst, -1e-12);
}

TEST(Multigaussian, ReducesToGaussian)
{
    std::mt19937_64 gen(7);
    const vec_type y = test_util::randn(6, gen);
    const vec_type w = vec_type::Constant(6, 1.0 / 6);
    const glm_multigaussian m(mat_type(y), w);
    const glm_gaussian g(y, w);
    const vec_type eta = test_util::randn(6, gen);
    EXPECT_DOUBLE_EQ(m.loss(eta), g.loss(eta));
    EXPECT_EQ(m.gradient(eta), g.gradient(eta));
    EXPECT_EQ(m.hessian(eta), g.hessian(eta));

    const mat_type Y = test_util::randn(4, 3, gen);
    const glm_multigaussian f(Y, vec_type::Constant(4, 0.25));
    EXPECT_EQ(f.gradient(flatten_rows(Y)).cwiseAbs().maxCoeff(), 0);
    EXPECT_LE(gradient_fd_error(f, test_util::randn(12, gen)), 1e-5);
}

TEST(Flatten, RowMajorLayout)
{
    mat_type B(2, 2);
    B << 1, 2, 3, 4;
    EXPECT_EQ(flatten_rows(B), vec({1, 2, 3, 4}));
    EXPECT_EQ(unflatten_rows(flatten_rows(B), 2), B);
    EXPECT_THROW(unflatten_rows(vec({1, 2, 3}), 2), util::dimension_mismatch_error);
}

TEST(MakeFamily, ByName)
{
    const mat_type y = mat_type::Constant(3, 1, 1.0);
    const vec_type w = vec_type::Constant(3, 1.0 / 3);
    for (std::string n : {"gaussian", "binomial", "poisson", "multigaussian"}) {
        EXPECT_EQ(make_family(n, y, w)->name(), n);
    }
    EXPECT_EQ(make_family("multinomial", y, w)->name(), "multinomial");
    EXPECT_TRUE(make_family("multinomial", y, w)->is_multi());
    EXPECT_FALSE(make_family("poisson", y, w)->is_multi());
    EXPECT_THROW(make_family("cox", y, w), util::invalid_argument_error);
    EXPECT_THROW(make_family("gaussian", mat_type::Zero(3, 2), w), util::dimension_mismatch_error);
    EXPECT_THROW(make_family("gaussian", y, vec_type::Ones(2)), util::dimension_mismatch_error);
}

} // namespace
