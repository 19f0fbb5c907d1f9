#include <gtest/gtest.h>
#include <algorithm>
#include <grpnet/matrix/matrix_dense.hpp>
#include <grpnet/solver/pqn.hpp>
#include "test_util.hpp"

namespace {

using namespace grpnet;
using namespace grpnet::solver;
using util::index_t;
using util::mat_type;
using util::vec_type;
using util::value_t;

struct binomial_data
{
    mat_type X;
    vec_type y;
};

binomial_data make_binomial(index_t n, index_t p, std::mt19937_64& gen)
{
    binomial_data out{test_util::randn(n, p, gen), vec_type(n)};
    vec_type beta = vec_type::Zero(p);
    for (index_t j = 0; j < std::min<index_t>(p, 4); ++j) beta[j] = j % 2 ? -1.0 : 1.0;
    const vec_type eta = out.X * beta;
    std::uniform_real_distribution<value_t> u(0, 1);
    for (index_t i = 0; i < n; ++i) out.y[i] = u(gen) < glm::sigmoid(eta[i]) ? 1 : 0;
    return out;
}

glm_problem binomial_problem(const binomial_data& bd, std::vector<index_t> sizes)
{
    const index_t n = bd.X.rows();
    auto fam = std::make_shared<glm::glm_binomial>(bd.y, vec_type::Constant(n, 1.0 / n));
    return make_glm_problem(std::make_shared<matrix::matrix_dense>(bd.X), std::move(sizes), fam);
}

// Largest violation of the penalized GLM optimality conditions, relative to lam.
value_t glm_kkt(const glm_problem& prob, const penalty_config& pc, const vec_type& beta, value_t b0, value_t lam)
{
    const mat_type X = test_util::to_dense(*prob.X);
    const vec_type eta = (X * beta).array() + b0;
    const vec_type xg = X.transpose() * prob.family->gradient(eta);
    value_t worst = 0;
    for (index_t g = 0; g < prob.G(); ++g) {
        const vec_type gg = -xg.segment(prob.group_starts[g], prob.group_sizes[g]);
        const vec_type bg = beta.segment(prob.group_starts[g], prob.group_sizes[g]);
        const value_t l1 = lam * pc.omega[g] * pc.alpha;
        const value_t l2 = lam * pc.omega[g] * (1 - pc.alpha);
        const value_t v = bg.norm() == 0
            ? std::max<value_t>(gg.norm() - l1, 0)
            : (gg - l2 * bg - l1 * bg / bg.norm()).norm();
        worst = std::max(worst, v / lam);
    }
    return worst;
}

TEST(IrlsConverged, Examples)
{
    std::mt19937_64 gen(1);
    const vec_type e = test_util::randn(5, gen), g = test_util::randn(5, gen);
    EXPECT_TRUE(irls_converged(e, e, g, test_util::randn(5, gen), 3, 1e-12));
    const vec_type e2 = test_util::randn(5, gen), g2 = test_util::randn(5, gen);
    const value_t crit = std::abs((e2 - e).dot(g2 - g));
    EXPECT_EQ(irls_converged(e, e2, g, g2, 1, crit * 1.01), true);
    EXPECT_EQ(irls_converged(e, e2, g, g2, 1, crit * 0.99), false);
    EXPECT_EQ(irls_converged(e2, e, g2, g, 1, crit * 0.99), false);
    EXPECT_EQ(irls_converged(e, e2, g, g2, 0, crit * 1.01), true);
    EXPECT_EQ(irls_converged(e, e2, g, g2, 2, crit * 0.51), true);
}

TEST(IrlsStep, GaussianIsExactInOneStep)
{
    std::mt19937_64 gen(2);
    const index_t n = 30;
    const mat_type X = test_util::randn(n, 6, gen);
    const vec_type y = X.col(0) - X.col(3) + test_util::randn(n, gen);
    const vec_type w = test_util::runif(n, 0.5, 1.5, gen);
    auto fam = std::make_shared<glm::glm_gaussian>(y, w / w.sum());
    const auto prob = make_glm_problem(std::make_shared<matrix::matrix_dense>(X), {2, 2, 2}, fam);
    const auto pc = make_penalty(3);
    glm_config cfg;
    solver_options opts;
    opts.tol = 1e-26;
    auto s = make_glm_state(prob, cfg);
    for (index_t g = 0; g < 3; ++g) glm_add_to_screen(s, g);
    const value_t lam = 0.05;
    irls_step(s, prob, pc, cfg, lam, opts);
    EXPECT_LE(glm_kkt(prob, pc, s.beta, s.beta0, lam), 1e-9);
    const vec_type b1 = s.beta;
    const auto r = irls_step(s, prob, pc, cfg, lam, opts);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((s.beta - b1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IrlsStep, GaussianCriterionIsPredictionChange)
{
    std::mt19937_64 gen(3);
    const index_t n = 20;
    const mat_type X = test_util::randn(n, 4, gen);
    const vec_type w = test_util::runif(n, 0.5, 1.5, gen);
    const vec_type wn = w / w.sum();
    const glm::glm_gaussian fam(test_util::randn(n, gen), wn);
    for (int t = 0; t < 5; ++t) {
        const vec_type b0 = test_util::randn(4, gen), b1 = test_util::randn(4, gen);
        const vec_type e0 = X * b0, e1 = X * b1;
        const value_t crit = std::abs((e1 - e0).dot(fam.gradient(e1) - fam.gradient(e0)));
        const vec_type xd = X * (b1 - b0);
        EXPECT_NEAR(crit, wn.dot(xd.cwiseProduct(xd)), 1e-12 * (1 + crit));
    }
}

TEST(IrlsStep, SurrogateGradientMatchesLoss)
{
    std::mt19937_64 gen(4);
    const auto bd = make_binomial(25, 4, gen);
    const glm::glm_binomial fam(bd.y, vec_type::Constant(25, 1.0 / 25));
    const vec_type eta = test_util::randn(25, gen);
    const vec_type g = fam.gradient(eta);
    const vec_type h = glm::apply_hessian_floor(fam.hessian(eta));
    const vec_type z = eta - g.cwiseQuotient(h);
    const auto q = [&](const vec_type& e) { return 0.5 * (h.array() * (z - e).array().square()).sum(); };
    for (index_t k = 0; k < 25; ++k) {
        vec_type a = eta, b = eta;
        a[k] += 1e-6;
        b[k] -= 1e-6;
        EXPECT_NEAR((q(a) - q(b)) / 2e-6, g[k], 1e-8);
    }
}

TEST(FitGlm, BinomialHugeLambdaGivesLogitMean)
{
    std::mt19937_64 gen(5);
    const auto bd = make_binomial(40, 6, gen);
    const auto prob = binomial_problem(bd, {3, 3});
    auto pc = make_penalty(2);
    pc.lambdas = {1e3};
    glm_config cfg;
    cfg.irls_eps = 1e-14;
    const auto res = fit_glm_path(prob, pc, cfg, solver_options{});
    EXPECT_EQ(vec_type(res.betas[0]).cwiseAbs().maxCoeff(), 0);
    const value_t ybar = bd.y.mean();
    EXPECT_NEAR(res.intercepts[0], std::log(ybar / (1 - ybar)), 1e-7);
}

TEST(FitGlm, BinomialSmallProblemKkt)
{
    std::mt19937_64 gen(6);
    const auto bd = make_binomial(20, 6, gen);
    const auto prob = binomial_problem(bd, {3, 3});
    auto pc = make_penalty(2);
    pc.lambda_count = 10;
    pc.lambda_ratio = 0.05;
    solver_options opts;
    opts.tol = 1e-20;
    glm_config cfg;
    cfg.irls_eps = 1e-14;
    const auto res = fit_glm_path(prob, pc, cfg, opts);
    for (std::size_t k = 0; k < res.lambdas.size(); ++k) {
        EXPECT_LE(res.diagnostics[k].kkt_max_residual, res.lambdas[k] * (1 + 1e-4));
        EXPECT_LE(glm_kkt(prob, pc, res.betas[k], res.intercepts[k], res.lambdas[k]), 1e-4);
    }
}

TEST(GlmLambdaMax, GaussianMatchesCenteredLambdaMax)
{
    std::mt19937_64 gen(7);
    const index_t n = 30;
    const mat_type X = test_util::randn(n, 6, gen);
    const vec_type y = X.col(1) + test_util::randn(n, gen) + vec_type::Constant(n, 4);
    const vec_type w = vec_type::Constant(n, 1.0 / n);
    auto fam = std::make_shared<glm::glm_gaussian>(y, w);
    auto Xm = std::make_shared<matrix::matrix_dense>(X);
    const auto prob = make_glm_problem(Xm, {3, 3}, fam);
    const auto pc = make_penalty(2);
    glm_config cfg;
    solver_options opts;
    opts.tol = 1e-26;
    const auto glm_lm = glm_lambda_max(prob, pc, cfg, opts);
    const vec_type r = y.array() - y.mean();
    const vec_type grad = X.transpose() * r / n;
    const value_t expected = std::max(grad.head(3).norm(), grad.tail(3).norm());
    EXPECT_NEAR(glm_lm.lmax, expected, 1e-10);
}

TEST(GlmLambdaMax, BinomialZeroAtLambdaMaxAndHomogeneous)
{
    std::mt19937_64 gen(8);
    const auto bd = make_binomial(50, 9, gen);
    const auto prob = binomial_problem(bd, {3, 3, 3});
    auto pc = make_penalty(3);
    glm_config cfg;
    cfg.irls_eps = 1e-14;
    solver_options opts;
    const auto lm = glm_lambda_max(prob, pc, cfg, opts);
    pc.lambdas = {lm.lmax};
    const auto res = fit_glm_path(prob, pc, cfg, opts);
    EXPECT_LE(vec_type(res.betas[0]).cwiseAbs().maxCoeff(), 1e-12);
    auto pc2 = make_penalty(3);
    pc2.omega *= 2;
    EXPECT_NEAR(glm_lambda_max(prob, pc2, cfg, opts).lmax, lm.lmax / 2, 1e-12);
}

TEST(FitGlm, GaussianFamilyMatchesGaussianPath)
{
    std::mt19937_64 gen(9);
    const index_t n = 40;
    mat_type X = test_util::randn(n, 12, gen);
    X.array() += 1.0;
    const vec_type y = X.col(0) - 2 * X.col(5) + test_util::randn(n, gen) + vec_type::Constant(n, 3);
    const vec_type w = test_util::runif(n, 0.5, 1.5, gen);
    auto Xm = std::make_shared<matrix::matrix_dense>(X);
    auto pc = make_penalty(4, 0.8);
    pc.lambda_count = 15;
    pc.lambda_ratio = 0.01;
    solver_options opts;
    opts.tol = 1e-24;
    opts.intercept = true;
    const auto ref = fit_path(make_design(Xm, {3, 3, 3, 3}, y, w), pc, opts);

    auto fam = std::make_shared<glm::glm_gaussian>(y, w / w.sum());
    glm_config cfg;
    cfg.irls_eps = 1e-20;
    solver_options gopts;
    gopts.tol = 1e-24;
    const auto res = fit_glm_path(make_glm_problem(Xm, {3, 3, 3, 3}, fam), pc, cfg, gopts);
    ASSERT_EQ(res.lambdas.size(), ref.lambdas.size());
    EXPECT_NEAR(res.lambda_max, ref.lambda_max, 1e-10);
    for (std::size_t k = 0; k < res.lambdas.size(); ++k) {
        EXPECT_LE((vec_type(res.betas[k]) - vec_type(ref.betas[k])).cwiseAbs().maxCoeff(), 1e-7);
        EXPECT_NEAR(res.intercepts[k], ref.intercepts[k], 1e-7);
    }
}

TEST(FitGlm, BinomialPathKktAndIrlsEconomy)
{
    std::mt19937_64 gen(10);
    const auto bd = make_binomial(100, 150, gen);
    const auto prob = binomial_problem(bd, std::vector<index_t>(50, 3));
    auto pc = make_penalty(50);
    pc.lambda_count = 50;
    glm_config cfg;
    std::size_t steps = 0, increases = 0;
    value_t last = 0, last_lam = -1;
    cfg.observer = [&](value_t lam, std::size_t it, value_t f) {
        if (lam == last_lam && it > 1) {
            ++steps;
            if (f > last + 1e-12 * std::abs(last)) ++increases;
        }
        last = f;
        last_lam = lam;
    };
    const auto res = fit_glm_path(prob, pc, cfg, solver_options{});
    std::vector<std::size_t> iters;
    for (std::size_t k = 0; k < res.lambdas.size(); ++k) {
        EXPECT_LE(res.diagnostics[k].kkt_max_residual, res.lambdas[k] * (1 + 1e-4));
        iters.push_back(res.diagnostics[k].irls_iters);
    }
    std::nth_element(iters.begin(), iters.begin() + iters.size() / 2, iters.end());
    EXPECT_LE(iters[iters.size() / 2], 5u);
    EXPECT_GT(steps, 0u);
    EXPECT_LE(static_cast<double>(increases), 0.01 * static_cast<double>(steps) + 1);
}

TEST(FitGlm, PoissonPathKkt)
{
    std::mt19937_64 gen(11);
    const index_t n = 60;
    const mat_type X = 0.5 * test_util::randn(n, 8, gen);
    const vec_type eta = X.col(0) - X.col(4);
    vec_type y(n);
    for (index_t i = 0; i < n; ++i) y[i] = std::poisson_distribution<int>(std::exp(eta[i]))(gen);
    auto fam = std::make_shared<glm::glm_poisson>(y, vec_type::Constant(n, 1.0 / n));
    const auto prob = make_glm_problem(std::make_shared<matrix::matrix_dense>(X), {2, 2, 2, 2}, fam);
    auto pc = make_penalty(4);
    pc.lambda_count = 20;
    solver_options opts;
    opts.tol = 1e-20;
    glm_config cfg;
    cfg.irls_eps = 1e-14;
    const auto res = fit_glm_path(prob, pc, cfg, opts);
    for (std::size_t k = 0; k < res.lambdas.size(); ++k) {
        EXPECT_LE(glm_kkt(prob, pc, res.betas[k], res.intercepts[k], res.lambdas[k]), 1e-4);
    }
}

TEST(FitGlm, OffsetShiftsGaussianResponse)
{
    std::mt19937_64 gen(12);
    const index_t n = 30;
    const mat_type X = test_util::randn(n, 4, gen);
    const vec_type y = X.col(0) + test_util::randn(n, gen);
    const vec_type off = test_util::randn(n, gen);
    const vec_type w = vec_type::Constant(n, 1.0 / n);
    auto Xm = std::make_shared<matrix::matrix_dense>(X);
    auto pc = make_penalty(2);
    pc.lambdas = {0.3, 0.1};
    solver_options opts;
    opts.tol = 1e-24;
    glm_config cfg;
    cfg.irls_eps = 1e-20;
    glm_config cfg_off = cfg;
    cfg_off.offset = off;
    const auto a = fit_glm_path(make_glm_problem(Xm, {2, 2}, std::make_shared<glm::glm_gaussian>(y, w)), pc, cfg_off, opts);
    const auto b = fit_glm_path(make_glm_problem(Xm, {2, 2}, std::make_shared<glm::glm_gaussian>(vec_type(y - off), w)), pc, cfg, opts);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LE((vec_type(a.betas[k]) - vec_type(b.betas[k])).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_NEAR(a.intercepts[k], b.intercepts[k], 1e-9);
    }
}

TEST(FitGlm, Errors)
{
    std::mt19937_64 gen(13);
    const auto bd = make_binomial(30, 6, gen);
    const auto prob = binomial_problem(bd, {3, 3});
    auto pc = make_penalty(2);
    pc.lambda_count = 5;
    glm_config cfg;
    cfg.irls_max_iter = 1;
    EXPECT_THROW(fit_glm_path(prob, pc, cfg, solver_options{}), util::iteration_limit_error);
    glm_config bad;
    bad.offset = vec_type::Zero(30);
    bad.offset[0] = std::numeric_limits<value_t>::quiet_NaN();
    EXPECT_THROW(fit_glm_path(prob, pc, bad, solver_options{}), util::non_finite_loss_error);
    glm_config short_off;
    short_off.offset = vec_type::Zero(3);
    EXPECT_THROW(fit_glm_path(prob, pc, short_off, solver_options{}), util::dimension_mismatch_error);
    solver_options cov;
    cov.mode = update_mode::covariance;
    EXPECT_THROW(fit_glm_path(prob, pc, glm_config{}, cov), util::invalid_argument_error);
    auto fam = std::make_shared<glm::glm_binomial>(vec_type::Zero(5), vec_type::Constant(5, 0.2));
    EXPECT_THROW(make_glm_problem(std::make_shared<matrix::matrix_dense>(bd.X), {3, 3}, fam), util::dimension_mismatch_error);
}

} // namespace
