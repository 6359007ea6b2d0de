#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace colcomp;
using namespace testutil;

namespace {

struct Instance {
    Dimensions d;
    Topology topo;
    SignalModel model;
    Matrix P;
    CompressionSet F;
    Matrix T;
};

Instance random_instance(Rng& rng, const Dimensions& d, double link_p = 0.6) {
    Instance in{d, random_topology(rng, d.M, d.N, link_p), {}, {}, {}, {}};
    in.model = random_model(rng, d, in.topo);
    in.P = random_spd(rng, d.P);
    in.F = random_compression(rng, d.M, d.L, 0.3);
    in.T = randn(rng, d.P, d.S);
    return in;
}

// Golden-section minimization of a unimodal function on [a, b].
template <class F>
double golden_min(F f, double a, double b) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), e = a + g * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (f(c) < f(e)) b = e;
        else a = c;
        c = b - g * (b - a);
        e = a + g * (b - a);
    }
    return f(0.5 * (a + b));
}

} // namespace

TEST(CollabAssembly, ObjectiveEqualsTraceOfUpdatedCovariance) {
    Rng rng(1);
    const Instance in = random_instance(rng, {3, 2, 4, 3, 2});
    const CollabProblem prob = assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T,
                                                       EnergyBudget::uniform(4, 1e6));
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix W = random_weights(rng, in.topo);
        const Vector w = vectorize_weights(W, prob.map);
        const double value = prob.qcqp.objective(w) - prob.ridge * w.squaredNorm();
        EXPECT_LE(rel_err(value, direct_trace(in.P, in.model, W, in.F, in.T)), 1e-10);
        EXPECT_LE(rel_err(value, design_mse(in.P, in.model, W, in.F, in.T)), 1e-10);
    }
}

TEST(CollabAssembly, ConstraintsEqualExpectedSensorEnergy) {
    Rng rng(2);
    const Instance in = random_instance(rng, {2, 3, 5, 2, 2});
    const CollabProblem prob = assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T,
                                                       EnergyBudget::uniform(5, 1e6));
    ASSERT_EQ(prob.qcqp.constraints.size(), 5u);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix W = random_weights(rng, in.topo);
        const Vector w = vectorize_weights(W, prob.map);
        for (Index i = 0; i < 5; ++i) {
            const double energy = total_cost(i, W, in.F, in.model, in.topo);
            EXPECT_LE(rel_err(prob.qcqp.constraints[static_cast<size_t>(i)].value(w), energy), 1e-10);
        }
    }
}

TEST(CollabAssembly, ConstraintMatricesArePositiveSemidefinite) {
    Rng rng(3);
    const Instance in = random_instance(rng, {2, 2, 4, 3, 2}, 0.8);
    const CollabProblem prob = assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T,
                                                       EnergyBudget::uniform(4, 10.0));
    for (const auto& c : prob.qcqp.constraints) EXPECT_GE(min_eigenvalue(c.Q), -1e-10 * c.Q.norm());
    EXPECT_GT(min_eigenvalue(prob.qcqp.Q0), 0.0);
}

TEST(CollabAssembly, ThrowsWhenCompressionNoiseAloneExceedsBudget) {
    Rng rng(4);
    Instance in = random_instance(rng, {2, 2, 3, 2, 2});
    in.F.f[1] *= 1e4;
    EXPECT_THROW(assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T, EnergyBudget::uniform(3, 1.0)),
                 InfeasibleStart);
}

TEST(CollabAssembly, RejectsMismatchedInputs) {
    Rng rng(5);
    const Instance in = random_instance(rng, {2, 2, 3, 2, 2});
    EXPECT_THROW(assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T, EnergyBudget::uniform(2, 1.0)),
                 DimensionMismatch);
    EXPECT_THROW(assemble_collab_problem(in.P, in.model, in.topo, in.F, Matrix::Zero(3, 2),
                                         EnergyBudget::uniform(3, 1.0)),
                 DimensionMismatch);
}

// With unlimited budgets the solution is the unconstrained minimizer Q0^{-1} d.
TEST(CollabSolve, LargeBudgetsGiveUnconstrainedMinimizer) {
    Rng rng(6);
    const Instance in = random_instance(rng, {3, 2, 3, 3, 3}, 1.0);
    const CollabProblem prob = assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T,
                                                       EnergyBudget::uniform(3, 1e12));
    const CollabSolution sol = solve_collaboration(prob);
    EXPECT_EQ(sol.status, QcqpStatus::UnconstrainedOptimal);
    const Vector w_star = prob.qcqp.Q0.ldlt().solve(prob.qcqp.d);
    EXPECT_LT((sol.w - w_star).norm(), 1e-8 * std::max(1.0, w_star.norm()));
}

TEST(CollabSolve, SolutionRespectsBudgetsAndBeatsFeasibleStart) {
    Rng rng(7);
    const Instance in = random_instance(rng, {3, 2, 5, 3, 3});
    const EnergyBudget budget = EnergyBudget::uniform(5, 1.0);
    const CollabProblem prob = assemble_collab_problem(in.P, in.model, in.topo, in.F, in.T, budget);
    const Vector start = Vector::Zero(prob.map.size());
    const CollabSolution sol = solve_collaboration(prob, start);
    EXPECT_TRUE(sol.monotone);
    EXPECT_LE(sol.objective, prob.qcqp.objective(start));
    for (Index i = 0; i < 5; ++i) EXPECT_LE(total_cost(i, sol.W, in.F, in.model, in.topo), 1.0 + 1e-8);
    in.topo.require_conforming(sol.W);
}

// One sensor, L = 1: the only weight is w_11 and the budget confines it to an interval.
TEST(CollabSolve, ScalarCaseMatchesGoldenSectionOracle) {
    const Dimensions d{1, 1, 1, 1, 1};
    const Topology topo = Topology::full(1, 1);
    SignalModel m = isotropic_model(d, 10, 10, 10);
    m.H(0, 0) = 1.5;
    m.G(0, 0) = 0.8;
    m = validate_model(m, d, topo);
    const Matrix P = Matrix::Constant(1, 1, 2.0);
    CompressionSet F;
    F.f.push_back(Vector::Constant(1, 0.7));
    const Matrix T = Matrix::Constant(1, 1, 0.9);
    const double mu = 0.5;
    const CollabProblem prob = assemble_collab_problem(P, m, topo, F, T, EnergyBudget::uniform(1, mu));
    const CollabSolution sol = solve_collaboration(prob);

    // f^2 (w^2 Ry + Ralpha) <= mu
    const double f2 = 0.49, Ry = m.Ry()(0, 0), Ra = m.Ralpha(0, 0);
    const double wmax = std::sqrt((mu / f2 - Ra) / Ry);
    auto mse = [&](double w) { return design_mse(P, m, Matrix::Constant(1, 1, w), F, T); };
    const double oracle = golden_min(mse, -wmax, wmax);
    EXPECT_NEAR(mse(sol.W(0, 0)), oracle, 1e-8);
    EXPECT_LE(std::abs(sol.W(0, 0)), wmax * (1 + 1e-9));
}
