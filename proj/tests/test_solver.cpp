#include <gtest/gtest.h>

#include "cqnn/verify.hpp"

using namespace cqnn;

namespace {

RegressorMatrix wrap(RowMatrix h, std::size_t n, std::size_t f) {
    return RegressorMatrix(std::move(h), ConvSpec(n, f), relu_like_activation());
}

}  // namespace

TEST(Solver, IdentitySystemReturnsLabels) {
    const ConvSpec spec(3, 2);  // q + n = 8
    const auto p = spec.weight_count();
    const RegressorMatrix h = wrap(RowMatrix::Identity(p, p), 3, 2);
    Vector y(static_cast<Eigen::Index>(p));
    y << 3, -1, 4, 1, -5, 9, 2, -6;
    const SolveReport rep = solve_ls(h, y);
    EXPECT_LE((rep.theta.values() - y).norm(), 1e-14);
    EXPECT_FALSE(rep.rank_deficient);
    EXPECT_EQ(rep.solve_strategy, SolveStrategy::cholesky);
    EXPECT_LE(rep.residual_norm, 1e-14);
}

TEST(Solver, RankDeficientScalarExampleIsMinimumNorm) {
    // n = f = 1, activation (1, 0, 1) written directly: columns [x^2 + 1, 0 * x]
    // for x in {-1, 0, 1}, labels x^2. d/dt [(2t - 1)^2 + t^2 + (2t - 1)^2] = 0 gives t = 4/9.
    RowMatrix h(3, 2);
    h << 2, 0, 1, 0, 2, 0;
    Vector y(3);
    y << 1, 0, 1;
    const SolveReport rep = solve_ls(wrap(h, 1, 1), y);
    EXPECT_TRUE(rep.rank_deficient);
    EXPECT_EQ(rep.solve_strategy, SolveStrategy::pseudoinverse);
    EXPECT_NEAR(rep.theta[0], 4.0 / 9.0, 1e-15);
    EXPECT_EQ(rep.theta[1], 0.0);
    EXPECT_NEAR(rep.residual_norm, std::sqrt(2.0 * (1.0 / 81.0) + 16.0 / 81.0), 1e-14);
}

TEST(Solver, ZeroLabelsGiveZeroWeights) {
    verify::Rng rng(3);
    const ConvSpec spec(6, 3);
    const Dataset data = verify::random_dataset(rng, 40, 6);
    const SolveReport rep = solve_ls(build_regressor(data, spec, relu_like_activation()), Vector::Zero(40));
    EXPECT_EQ(rep.theta.values().norm(), 0.0);
    EXPECT_EQ(rep.residual_norm, 0.0);
}

TEST(Solver, UnderdeterminedIsFlagged) {
    verify::Rng rng(4);
    const ConvSpec spec(5, 2);
    const Dataset data = verify::random_dataset(rng, 4, 5);  // 4 rows, 14 unknowns
    const SolveReport rep = solve_ls(build_regressor(data, spec, relu_like_activation()), data.labels());
    EXPECT_TRUE(rep.rank_deficient);
    EXPECT_EQ(rep.solve_strategy, SolveStrategy::pseudoinverse);
    EXPECT_LE(rep.residual_norm, 1e-10);

    // minimum norm: theta lies in the row space of H
    const RegressorMatrix h = build_regressor(data, spec, relu_like_activation());
    const RowMatrix& hm = h.matrix();
    const Vector theta = rep.theta.values();
    const Vector coeff = (hm * hm.transpose()).ldlt().solve(hm * theta);
    EXPECT_LE((hm.transpose() * coeff - theta).norm(), 1e-9 * theta.norm());
}

TEST(Solver, Errors) {
    const RegressorMatrix h = wrap(RowMatrix::Identity(2, 2), 1, 1);
    EXPECT_THROW(solve_ls(h, Vector::Ones(3)), DimensionMismatch);
    Vector y = Vector::Ones(2);
    y[1] = std::nan("");
    EXPECT_THROW(solve_ls(h, y), NonFiniteInput);
    EXPECT_THROW(solve_ridge(h, Vector::Ones(2), -1.0), NegativeRegularizer);
    EXPECT_THROW(solve_dense(Matrix::Constant(2, 2, std::numeric_limits<double>::infinity()), Vector::Ones(2)),
                 NonFiniteInput);
}

TEST(Ridge, ScalarClosedForm) {
    RowMatrix h(2, 1);
    h << 1, 1;
    const LinearSolution s = solve_dense(h, Vector::Ones(2), 2.0);
    EXPECT_DOUBLE_EQ(s.theta[0], 0.5);
}

TEST(Ridge, ZeroBetaMatchesPlainLeastSquares) {
    verify::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const ConvSpec spec = verify::random_spec(rng, 8);
        const Dataset data = verify::random_dataset(rng, 3 * spec.weight_count(), spec.n());
        const RegressorMatrix h = build_regressor(data, spec, verify::random_activation(rng));
        const Vector a = solve_ls(h, data.labels()).theta.values();
        const Vector b = solve_ridge(h, data.labels(), 0.0).theta.values();
        EXPECT_LE((a - b).norm(), 1e-10 * std::max(1.0, a.norm()));
        const Vector c = h.matrix().colPivHouseholderQr().solve(data.labels());
        EXPECT_LE((a - c).norm(), 1e-8 * std::max(1.0, c.norm()));
    }
}

TEST(Ridge, LargeBetaShrinks) {
    verify::Rng rng(6);
    const ConvSpec spec(6, 2);
    const Dataset data = verify::random_dataset(rng, 50, 6);
    const RegressorMatrix h = build_regressor(data, spec, relu_like_activation());
    const double beta = 1e12;
    const SolveReport rep = solve_ridge(h, data.labels(), beta);
    EXPECT_LE(rep.theta.values().norm(), (h.matrix().transpose() * data.labels()).norm() / beta);
}

TEST(Ridge, NormalEquationsAndMonotoneShrinkage) {
    verify::Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const ConvSpec spec = verify::random_spec(rng, 8);
        const Dataset data = verify::random_dataset(rng, spec.weight_count() + 5, spec.n());
        const RegressorMatrix h = build_regressor(data, spec, verify::random_activation(rng));
        const Vector hty = h.matrix().transpose() * data.labels();
        double prev = std::numeric_limits<double>::infinity();
        for (double beta : {0.0, 1e-3, 0.1, 1.0, 10.0, 100.0}) {
            const SolveReport rep = solve_ridge(h, data.labels(), beta);
            const Vector& theta = rep.theta.values();
            const Matrix normal =
                h.matrix().transpose() * h.matrix() + beta * Matrix::Identity(theta.size(), theta.size());
            EXPECT_LE((normal * theta - hty).norm(), 1e-8 * std::max(1.0, hty.norm())) << "beta=" << beta;
            EXPECT_LE(theta.norm(), prev + 1e-10);
            prev = theta.norm();
        }
    }
}

TEST(Ridge, RankDeficientSystemStillSolvedWithPositiveBeta) {
    RowMatrix h(3, 2);
    h << 2, 0, 1, 0, 2, 0;
    Vector y(3);
    y << 1, 0, 1;
    const SolveReport rep = solve_ridge(wrap(h, 1, 1), y, 0.5);
    // (9 + 0.5) t = 4
    EXPECT_NEAR(rep.theta[0], 4.0 / 9.5, 1e-15);
    EXPECT_EQ(rep.theta[1], 0.0);
    EXPECT_LE(rep.normal_residual_norm, 1e-14);
}

TEST(Solver, OptimalityProbe) {
    const auto r = verify::ls_optimality(42, 30);
    EXPECT_TRUE(r.passed) << r.detail << " max_error=" << r.max_error;
}
