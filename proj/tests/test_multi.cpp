#include <gtest/gtest.h>
#include <grpnet/multi/multi_response.hpp>
#include "test_util.hpp"

namespace {

using namespace grpnet;
using namespace grpnet::multi;
using util::index_t;
using util::mat_type;
using util::vec_type;
using util::value_t;

std::shared_ptr<const matrix::matrix_naive_base> dense(const mat_type& X)
{
    return std::make_shared<matrix::matrix_dense>(X);
}

solver::solver_options tight()
{
    solver::solver_options o;
    o.tol = 1e-24;
    return o;
}

TEST(Flatten, Layout)
{
    mat_type B(2, 2);
    B << 1, 2, 3, 4;
    const vec_type f = flatten_coeffs(B);
    EXPECT_EQ(f, (vec_type(4) << 1, 2, 3, 4).finished());
    EXPECT_EQ(unflatten_coeffs(f, 2), B);
    std::mt19937_64 gen(1);
    const mat_type R = test_util::randn(5, 3, gen);
    EXPECT_EQ(unflatten_coeffs(flatten_coeffs(R), 3), R);
}

TEST(BuildMultiDesign, GroupedWithIntercept)
{
    std::mt19937_64 gen(2);
    const mat_type X = test_util::randn(6, 3, gen);
    const mat_type Y = test_util::randn(6, 2, gen);
    multi_penalty_spec spec;
    const auto md = build_multi_design(dense(X), Y, vec_type(), spec, true);
    EXPECT_EQ(md.group_sizes, (std::vector<index_t>{2, 2, 2, 2}));
    EXPECT_EQ(md.omega, (vec_type(4) << 0, 1, 1, 1).finished());
    EXPECT_EQ(md.X->rows(), 12);
    EXPECT_EQ(md.X->cols(), 8);
    EXPECT_NEAR(md.weights.sum(), 1, 1e-15);
    EXPECT_EQ(md.y, glm::flatten_rows(Y));

    // dense expansion oracle for the flattened matrix
    mat_type full = mat_type::Zero(12, 8);
    for (index_t i = 0; i < 6; ++i)
        for (index_t k = 0; k < 2; ++k) {
            full(i * 2 + k, k) = 1;
            for (index_t j = 0; j < 3; ++j) full(i * 2 + k, 2 + j * 2 + k) = X(i, j);
        }
    EXPECT_LE((test_util::to_dense(*md.X) - full).cwiseAbs().maxCoeff(), 1e-15);
    mat_type g(2, 2);
    md.X->gram_block(4, 2, md.weights, g);
    const mat_type gref = full.middleCols(4, 2).transpose() * md.weights.asDiagonal() * full.middleCols(4, 2);
    EXPECT_LE((g - gref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildMultiDesign, UngroupedAndErrors)
{
    std::mt19937_64 gen(3);
    const mat_type X = test_util::randn(5, 2, gen);
    const mat_type Y = test_util::randn(5, 3, gen);
    multi_penalty_spec spec;
    spec.mode = multi_mode::ungrouped;
    const auto md = build_multi_design(dense(X), Y, vec_type(), spec, false);
    EXPECT_EQ(md.group_sizes, std::vector<index_t>(6, 1));
    spec.omega = vec_type::Ones(2);
    EXPECT_THROW(build_multi_design(dense(X), Y, vec_type(), spec, false), util::dimension_mismatch_error);
    EXPECT_THROW(build_multi_design(dense(X), test_util::randn(4, 3, gen), vec_type(), multi_penalty_spec{}, false),
                 util::dimension_mismatch_error);
    EXPECT_THROW(parse_multi_mode("rows"), util::invalid_argument_error);
}

TEST(FitMulti, SingleResponseReduction)
{
    std::mt19937_64 gen(4);
    const index_t n = 40;
    const mat_type X = test_util::randn(n, 6, gen);
    const vec_type y = X.col(0) - X.col(2) + test_util::randn(n, gen) + vec_type::Constant(n, 2);
    multi_penalty_spec spec;
    spec.lambda_count = 12;
    const auto mr = fit_multi_path(dense(X), mat_type(y), vec_type(), spec, "multigaussian", true, tight());

    auto pc = solver::make_penalty(6);
    pc.lambda_count = 12;
    auto opts = tight();
    opts.intercept = true;
    const auto ref = solver::fit_path(solver::make_design(dense(X), std::vector<index_t>(6, 1), y), pc, opts);
    EXPECT_NEAR(mr.lambda_max, ref.lambda_max, 1e-12);
    for (std::size_t k = 0; k < ref.lambdas.size(); ++k) {
        EXPECT_LE((mr.coefs[k].col(0) - vec_type(ref.betas[k])).cwiseAbs().maxCoeff(), 1e-7);
        EXPECT_NEAR(mr.intercepts[k][0], ref.intercepts[k], 1e-7);
    }
}

TEST(FitMulti, UngroupedSplitsIntoIndependentFits)
{
    std::mt19937_64 gen(5);
    const index_t n = 50, p = 8, c = 3;
    const mat_type X = test_util::randn(n, p, gen);
    mat_type Y(n, c);
    for (index_t k = 0; k < c; ++k) Y.col(k) = X.col(k) * (1 + k) + test_util::randn(n, gen);
    multi_penalty_spec spec;
    spec.mode = multi_mode::ungrouped;
    spec.lambdas = {0.3, 0.1, 0.03};
    const auto mr = fit_multi_path(dense(X), Y, vec_type(), spec, "multigaussian", true, tight());
    for (index_t k = 0; k < c; ++k) {
        auto pc = solver::make_penalty(p);
        for (auto l : spec.lambdas) pc.lambdas.push_back(c * l);
        auto opts = tight();
        opts.intercept = true;
        const auto ref = solver::fit_path(
            solver::make_design(dense(X), std::vector<index_t>(p, 1), Y.col(k)), pc, opts);
        for (std::size_t l = 0; l < spec.lambdas.size(); ++l) {
            EXPECT_LE((mr.coefs[l].col(k) - vec_type(ref.betas[l])).cwiseAbs().maxCoeff(), 1e-7);
            EXPECT_NEAR(mr.intercepts[l][k], ref.intercepts[l], 1e-7);
        }
    }
}

TEST(FitMulti, GroupedIsRowSparse)
{
    std::mt19937_64 gen(6);
    const index_t n = 40, p = 10, c = 3;
    const mat_type X = test_util::randn(n, p, gen);
    mat_type Y = test_util::randn(n, c, gen);
    Y.col(0) += 2 * X.col(1);
    Y.col(2) -= X.col(4);
    multi_penalty_spec spec;
    spec.lambda_count = 15;
    spec.lambda_ratio = 0.01;
    for (const std::string fam : {"multigaussian", "multinomial"}) {
        mat_type Yf = Y;
        if (fam == "multinomial") {
            Yf.setZero();
            for (index_t i = 0; i < n; ++i) {
                index_t arg;
                Y.row(i).maxCoeff(&arg);
                Yf(i, arg) = 1;
            }
        }
        const auto mr = fit_multi_path(dense(X), Yf, vec_type(), spec, fam, true, solver::solver_options{});
        std::size_t nonzero_rows = 0;
        for (const auto& B : mr.coefs) {
            for (index_t j = 0; j < p; ++j) {
                const auto zeros = (B.row(j).array() == 0).count();
                EXPECT_TRUE(zeros == 0 || zeros == c) << fam << " row " << j;
                nonzero_rows += zeros == 0;
            }
        }
        EXPECT_GT(nonzero_rows, 0u);
        EXPECT_EQ(mr.coefs[0].cwiseAbs().maxCoeff(), 0);
    }
}

TEST(FitMulti, MultinomialAtLambdaMaxGivesLogProportions)
{
    std::mt19937_64 gen(7);
    const index_t n = 60, c = 3;
    const mat_type X = test_util::randn(n, 4, gen);
    mat_type Y = mat_type::Zero(n, c);
    for (index_t i = 0; i < n; ++i) Y(i, (i * 7) % 5 % c) = 1;
    multi_penalty_spec spec;
    spec.lambda_count = 1;
    solver::glm_config cfg;
    cfg.irls_eps = 1e-16;
    const auto mr = fit_multi_path(dense(X), Y, vec_type(), spec, "multinomial", true, solver::solver_options{}, cfg);
    EXPECT_EQ(mr.coefs[0].cwiseAbs().maxCoeff(), 0);
    const vec_type props = Y.colwise().mean();
    const vec_type b0 = mr.intercepts[0];
    for (index_t k = 1; k < c; ++k) {
        EXPECT_NEAR(b0[k] - b0[0], std::log(props[k] / props[0]), 1e-6);
    }
}

TEST(FitMulti, TwoClassMultinomialMatchesBinomial)
{
    std::mt19937_64 gen(8);
    const index_t n = 80, p = 6;
    const mat_type X = test_util::randn(n, p, gen);
    const vec_type eta = X.col(0) - 0.5 * X.col(3);
    vec_type yb(n);
    std::uniform_real_distribution<value_t> u(0, 1);
    for (index_t i = 0; i < n; ++i) yb[i] = u(gen) < glm::sigmoid(eta[i]) ? 1 : 0;
    mat_type Y(n, 2);
    Y.col(0) = yb;
    Y.col(1) = vec_type::Ones(n) - yb;

    multi_penalty_spec spec;
    spec.lambdas = {0.05, 0.02, 0.005};
    solver::glm_config cfg;
    cfg.irls_eps = 1e-20;
    const auto mr = fit_multi_path(dense(X), Y, vec_type(), spec, "multinomial", true, tight(), cfg);

    // loss averaged over two classes and ||(b, -b) / 2|| = |b| / sqrt(2): lam_binomial = sqrt(2) lam
    auto fam = std::make_shared<glm::glm_binomial>(yb, vec_type::Constant(n, 1.0 / n));
    auto pc = solver::make_penalty(p);
    for (auto l : spec.lambdas) pc.lambdas.push_back(std::sqrt(2.0) * l);
    const auto ref = solver::fit_glm_path(
        solver::make_glm_problem(dense(X), std::vector<index_t>(p, 1), fam), pc, cfg, tight());
    for (std::size_t l = 0; l < spec.lambdas.size(); ++l) {
        const vec_type diff = (X * (mr.coefs[l].col(0) - mr.coefs[l].col(1))).array()
            + (mr.intercepts[l][0] - mr.intercepts[l][1]);
        const vec_type eb = (X * vec_type(ref.betas[l])).array() + ref.intercepts[l];
        EXPECT_LE((diff - eb).cwiseAbs().maxCoeff(), 1e-4);
    }
}

TEST(FitMulti, RejectsSingleResponseFamily)
{
    const mat_type X = mat_type::Ones(4, 2);
    EXPECT_THROW(fit_multi_path(dense(X), mat_type::Ones(4, 2), vec_type(), multi_penalty_spec{}, "gaussian",
                 true, solver::solver_options{}), util::invalid_argument_error);
}

} // namespace
