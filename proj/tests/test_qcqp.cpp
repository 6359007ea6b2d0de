#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace colcomp;
using namespace testutil;

namespace {

ConvexQcqp random_convex(Rng& rng, Index n, int constraints, double bound_scale) {
    ConvexQcqp p;
    p.Q0 = random_spd(rng, n);
    p.d = 3.0 * randn(rng, n, 1);
    p.offset = 0.5;
    for (int i = 0; i < constraints; ++i) {
        QuadraticConstraint c;
        c.Q = random_spd(rng, n, 0.05);
        c.offset = 0.1;
        c.bound = 0.1 + bound_scale;
        p.constraints.push_back(c);
    }
    return p;
}

// Zooming grid search over a box containing the feasible set; valid for convex problems.
double grid_oracle(const ConvexQcqp& p, double radius) {
    double cx = 0.0, cy = 0.0, half = radius, best = std::numeric_limits<double>::infinity();
    const int n = 201;
    for (int level = 0; level < 12; ++level) {
        double bx = cx, by = cy;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                Vector x(2);
                x << cx - half + 2.0 * half * a / (n - 1), cy - half + 2.0 * half * b / (n - 1);
                if (p.max_violation(x) > 0.0) continue;
                const double f = p.objective(x);
                if (f < best) {
                    best = f;
                    bx = x(0);
                    by = x(1);
                }
            }
        cx = bx;
        cy = by;
        half *= 0.1;
    }
    return best;
}

} // namespace

TEST(ConvexQcqp, UnconstrainedMinimizerWhenStrictlyFeasible) {
    Rng rng(1);
    ConvexQcqp p = random_convex(rng, 3, 2, 1e6);
    const ConvexQcqpResult r = solve_convex_qcqp(p);
    EXPECT_EQ(r.status, QcqpStatus::UnconstrainedOptimal);
    const Vector xu = p.Q0.llt().solve(p.d);
    EXPECT_LT((r.x - xu).norm(), 1e-12 * xu.norm());
}

TEST(ConvexQcqp, ScalarActiveConstraintHitsBoundary) {
    // minimize x^2 - 2*4x subject to x^2 <= 1: optimum at x = 1
    ConvexQcqp p;
    p.Q0 = Matrix::Identity(1, 1);
    p.d = Vector::Constant(1, 4.0);
    p.constraints.push_back({Matrix::Identity(1, 1), 0.0, 1.0});
    const ConvexQcqpResult r = solve_convex_qcqp(p);
    EXPECT_EQ(r.status, QcqpStatus::Optimal);
    EXPECT_NEAR(r.x(0), 1.0, 1e-8);
    EXPECT_LE(p.max_violation(r.x), 0.0);
    // stationarity: 2(x - 4) + 2 lambda x = 0 -> lambda = 3
    EXPECT_NEAR(r.multipliers[0], 3.0, 1e-6);
}

TEST(ConvexQcqp, ThrowsWhenOriginIsNotStrictlyFeasible) {
    ConvexQcqp p;
    p.Q0 = Matrix::Identity(2, 2);
    p.d = Vector::Ones(2) * 10.0;
    p.constraints.push_back({Matrix::Identity(2, 2), 1.0, 1.0});
    EXPECT_THROW(solve_convex_qcqp(p), InfeasibleStart);
}

TEST(ConvexQcqp, RejectsShapeMismatch) {
    ConvexQcqp p;
    p.Q0 = Matrix::Identity(2, 2);
    p.d = Vector::Ones(3);
    EXPECT_THROW(solve_convex_qcqp(p), DimensionMismatch);
}

TEST(ConvexQcqp, MatchesGridOracleInTwoDimensions) {
    Rng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const ConvexQcqp p = random_convex(rng, 2, 1 + rep % 3, 0.5);
        const ConvexQcqpResult r = solve_convex_qcqp(p);
        EXPECT_LE(p.max_violation(r.x), 1e-8);
        // every constraint matrix has eigenvalues >= 0.05, so |x|^2 <= 0.5 / 0.05
        const double oracle = grid_oracle(p, std::sqrt(10.0));
        EXPECT_NEAR(r.objective, oracle, 1e-3);
        EXPECT_LE(r.objective, oracle + 1e-9);
    }
}

TEST(ConvexQcqp, KktResidualSmallAtOptimum) {
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const ConvexQcqp p = random_convex(rng, 6, 4, 0.2);
        const ConvexQcqpResult r = solve_convex_qcqp(p);
        EXPECT_EQ(r.status, QcqpStatus::Optimal);
        EXPECT_LT(r.kkt_residual, 1e-6);
        EXPECT_LE(r.duality_gap, 1e-9);
        for (double lam : r.multipliers) EXPECT_GE(lam, 0.0);
    }
}

// A PSD-but-singular constraint matrix leaves directions unconstrained; the
// solver must still converge when Q0 bounds them.
TEST(ConvexQcqp, SingularConstraintMatrix) {
    ConvexQcqp p;
    p.Q0 = Matrix::Identity(2, 2);
    p.d = Vector::Constant(2, 2.0);
    Matrix q = Matrix::Zero(2, 2);
    q(0, 0) = 1.0;
    p.constraints.push_back({q, 0.0, 1.0});
    const ConvexQcqpResult r = solve_convex_qcqp(p);
    EXPECT_NEAR(r.x(0), 1.0, 1e-8);
    EXPECT_NEAR(r.x(1), 2.0, 1e-8);
}

TEST(WhitenPair, DiagonalizesBothMatrices) {
    Rng rng(4);
    const Matrix Q1 = random_spd(rng, 5);
    const Matrix Q2 = symmetrized(randn(rng, 5, 5));
    const WhitenedPair wp = whiten_pair(Q1, Q2);
    EXPECT_LT((wp.transform * Q1 * wp.transform.transpose() - identity(5)).norm(), 1e-10);
    Matrix d = wp.transform * Q2 * wp.transform.transpose();
    EXPECT_LT((d - Matrix(wp.sigma.asDiagonal())).norm(), 1e-10);
    for (Index i = 1; i < 5; ++i) EXPECT_GE(wp.sigma(i - 1), wp.sigma(i));
    EXPECT_THROW(whiten_pair(-identity(2), identity(2)), NotPositiveDefinite);
}

TEST(SecularFunction, DecreasingBetweenPoles) {
    Vector sigma(3), m(3);
    sigma << 2.0, 0.5, -1.0;
    m << 1.0, -2.0, 0.5;
    double prev = secular_function(-0.49, sigma, m);
    for (double beta = -0.45; beta < 0.99; beta += 0.05) {
        const double h = secular_function(beta, sigma, m);
        EXPECT_LT(h, prev);
        prev = h;
    }
}

TEST(SingleEquality, ZeroConstraintGivesUnconstrainedMinimizer) {
    Rng rng(5);
    SingleEqualityQcqp p{random_spd(rng, 4), Matrix::Zero(4, 4), randn(rng, 4, 1)};
    const SingleEqualityResult r = solve_single_equality_qcqp(p);
    EXPECT_EQ(r.which, EqualityCase::Unconstrained);
    EXPECT_LT((p.Q1 * r.t - p.ell).norm(), 1e-10);
}

// In two dimensions with an indefinite Q2 the feasible set is two lines through the
// origin; minimizing along each line in closed form gives the global optimum.
TEST(SingleEquality, MatchesLineRestrictionOracleInTwoDimensions) {
    Rng rng(6);
    int checked = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const Matrix Q1 = random_spd(rng, 2);
        Matrix Q2 = symmetrized(randn(rng, 2, 2));
        if (Q2.determinant() >= -1e-3) continue;
        const Vector ell = randn(rng, 2, 1);
        Eigen::SelfAdjointEigenSolver<Matrix> es(Q2);
        const double s1 = es.eigenvalues()(0), s2 = es.eigenvalues()(1); // s1 < 0 < s2
        const Vector u1 = es.eigenvectors().col(0), u2 = es.eigenvectors().col(1);
        double oracle = 0.0;
        for (double sign : {1.0, -1.0}) {
            // t = a u1 + b u2 with s1 a^2 + s2 b^2 = 0
            const Vector v = std::sqrt(s2) * u1 + sign * std::sqrt(-s1) * u2;
            const double lv = ell.dot(v);
            oracle = std::min(oracle, -lv * lv / v.dot(Q1 * v));
        }
        const SingleEqualityResult r = solve_single_equality_qcqp({Q1, Q2, ell});
        EXPECT_LE(r.constraint_residual, 1e-8);
        EXPECT_NEAR(r.t.dot(Q1 * r.t) - 2.0 * ell.dot(r.t), oracle, 1e-8 * std::max(1.0, std::abs(oracle)));
        ++checked;
    }
    EXPECT_GT(checked, 10);
}

TEST(SingleEquality, ResidualsOnRandomIndefiniteInstances) {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const Index n = 2 + rep % 8;
        const SingleEqualityQcqp p{random_spd(rng, n), checks::detail::random_indefinite(rng, n), randn(rng, n, 1)};
        const SingleEqualityResult r = solve_single_equality_qcqp(p);
        ASSERT_NE(r.which, EqualityCase::NoStationaryPoint);
        EXPECT_LE(r.constraint_residual, 1e-8);
        EXPECT_LE(r.stationarity_residual, 1e-6);
    }
}

// A definite constraint leaves the origin as the only feasible point.
TEST(SingleEquality, DefiniteConstraintReturnsOrigin) {
    Rng rng(8);
    const SingleEqualityQcqp p{random_spd(rng, 3), random_spd(rng, 3), randn(rng, 3, 1)};
    const SingleEqualityResult r = solve_single_equality_qcqp(p);
    EXPECT_EQ(r.which, EqualityCase::NoStationaryPoint);
    EXPECT_EQ(r.t.norm(), 0.0);
}

// Q2 = diag(1, 0): the constraint forces t_0 = 0 and no KKT point exists; the
// minimizer over the null space is returned.
TEST(SingleEquality, SemidefiniteConstraintReducesToNullSpace) {
    Matrix Q2 = Matrix::Zero(2, 2);
    Q2(0, 0) = 1.0;
    Vector ell(2);
    ell << 1.0, 2.0;
    const SingleEqualityResult r = solve_single_equality_qcqp({identity(2), Q2, ell});
    EXPECT_NEAR(r.t(0), 0.0, 1e-8);
    EXPECT_NEAR(r.t(1), 2.0, 1e-8);
    EXPECT_EQ(r.which, EqualityCase::NoStationaryPoint);
}
