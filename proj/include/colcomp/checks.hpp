#pragma once

#include <cstdio>
#include <limits>
#include <string>

#include <colcomp/collab.hpp>
#include <colcomp/compress.hpp>
#include <colcomp/kronmap.hpp>

// Self-checks of the algebraic identities and solvers against brute-force
// oracles. Shared by the `check` subcommand and the acceptance suite.
namespace colcomp::checks {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

inline std::string format_detail(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    return buf;
}

namespace detail {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline Matrix random_spd(Rng& rng, Index n, double floor = 0.1) {
    const Matrix a = standard_normal(rng, n, n);
    return a * a.transpose() / static_cast<double>(n) + floor * identity(n);
}

inline Topology random_topology(Rng& rng, Index M, Index N, double p) {
    std::bernoulli_distribution link(p);
    Eigen::MatrixXi a(M, N);
    for (Index i = 0; i < M; ++i)
        for (Index j = 0; j < N; ++j) a(i, j) = (i == j || link(rng)) ? 1 : 0;
    return Topology(a);
}

inline Matrix random_weights(Rng& rng, const Topology& topo) {
    Matrix w = standard_normal(rng, topo.rows(), topo.cols());
    for (Index i = 0; i < w.rows(); ++i)
        for (Index j = 0; j < w.cols(); ++j)
            if (!topo.linked(i, j)) w(i, j) = 0.0;
    return w;
}

inline SignalModel random_model(Rng& rng, const Dimensions& d, const Topology& topo) {
    SignalModel m;
    m.x0 = standard_normal(rng, d.P, 1);
    m.Rx = random_spd(rng, d.P);
    m.H = standard_normal(rng, d.N * d.L, d.P);
    m.G = standard_normal(rng, d.S, d.M);
    for (Index i = 0; i < d.N; ++i) m.Rv_blocks.push_back(0.1 * random_spd(rng, d.L));
    for (Index i = 0; i < d.M; ++i) m.Ralpha_blocks.push_back(0.1 * random_spd(rng, d.L));
    m.Reps = 0.1 * random_spd(rng, d.S);
    return validate_model(m, d, topo);
}

inline CompressionSet random_compression(Rng& rng, Index M, Index L, double scale) {
    CompressionSet F;
    for (Index i = 0; i < M; ++i) F.f.push_back(scale * standard_normal(rng, L, 1));
    return F;
}

// tr P(k) with every Kronecker product and block matrix formed explicitly.
inline double explicit_trace(const Matrix& P, const SignalModel& m, const Matrix& W, const CompressionSet& F,
                             const Matrix& T) {
    const Index L = m.L(), M = W.rows(), N = W.cols();
    Matrix WI = Matrix::Zero(M * L, N * L);
    for (Index i = 0; i < M; ++i)
        for (Index j = 0; j < N; ++j)
            for (Index l = 0; l < L; ++l) WI(i * L + l, j * L + l) = W(i, j);
    Matrix Fm = Matrix::Zero(M, M * L);
    for (Index i = 0; i < M; ++i)
        for (Index l = 0; l < L; ++l) Fm(i, i * L + l) = F.f[static_cast<size_t>(i)](l);
    const Matrix TGF = T * m.G * Fm;
    const Matrix TA = TGF * WI;
    const Matrix E = Matrix::Identity(P.rows(), P.rows()) - TA * m.H;
    return (E * P * E.transpose()).trace() + (TA * m.Rv * TA.transpose()).trace()
           + (TGF * m.Ralpha * TGF.transpose()).trace() + (T * m.Reps * T.transpose()).trace();
}

} // namespace detail

// The three lifting identities on random (B, C, D, a, W) against explicit Kronecker products.
inline CheckResult lift_identities(int tuples, std::uint64_t seed) {
    Rng rng(seed);
    const int dims[][3] = {{1, 1, 1}, {1, 2, 1}, {1, 3, 1}, {1, 4, 1}, {2, 2, 1}, {2, 3, 1},
                           {2, 4, 1}, {3, 3, 1}, {3, 4, 1}, {1, 1, 2}, {1, 2, 2}, {1, 3, 2},
                           {1, 4, 2}, {2, 2, 2}, {2, 3, 2}, {2, 4, 2}, {3, 3, 2}, {3, 4, 2}};
    const int n_dims = static_cast<int>(sizeof dims / sizeof dims[0]);
    double worst = 0.0;
    for (int t = 0; t < tuples; ++t) {
        const Index M = dims[t % n_dims][0], N = dims[t % n_dims][1], L = dims[t % n_dims][2];
        const Index r = 1 + t % 3;
        const Topology topo = detail::random_topology(rng, M, N, 0.6);
        const WeightIndexMap map(topo);
        const Matrix W = detail::random_weights(rng, topo);
        const Vector w = vectorize_weights(W, map);
        const Matrix WI = kron(W, identity(L));

        const Vector a = standard_normal(rng, M * L, 1);
        const Matrix lhs = a.transpose() * WI, rhs = w.transpose() * row_lift(a, map, L);
        worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));

        const Matrix B = standard_normal(rng, r, M * L), C = standard_normal(rng, N * L, N * L),
                     D = standard_normal(rng, M * L, r);
        worst = std::max(worst, detail::rel_err((B * WI * C * WI.transpose() * D).trace(),
                                                w.dot(quad_form_matrix(B, C, D, map, L) * w)));
        const Matrix C1 = standard_normal(rng, N * L, r);
        worst = std::max(worst, detail::rel_err((B * WI * C1).trace(), w.dot(linear_form_vector(B, C1, map, L))));
    }
    return {"lift identities", worst <= 1e-10,
            format_detail("%.0f tuples, worst relative error %.3g", tuples, worst)};
}

// The printed 3 x 6 example: column-major w ordering and the 6 x 9 selector J.
inline CheckResult worked_example() {
    Eigen::MatrixXi a(3, 6);
    a << 1, 0, 0, 1, 1, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0;
    Matrix W(3, 6);
    W << 1, 0, 0, 5, 7, 0, 2, 3, 0, 0, 8, 9, 0, 0, 4, 6, 0, 0;
    const WeightIndexMap map{Topology(a)};
    const Vector w = vectorize_weights(W, map);
    bool ok = w.size() == 9;
    for (Index u = 0; ok && u < 9; ++u) ok = w(u) == static_cast<double>(u + 1);
    Matrix J = Matrix::Zero(6, 9);
    J(0, 1) = J(1, 4) = J(2, 5) = J(3, 6) = J(4, 7) = J(5, 8) = 1.0;
    const OffDiagonalSelector sel = off_diagonal_selector(map);
    ok = ok && sel.J.rows() == 6 && sel.J.cols() == 9 && sel.J == J;
    Vector wt(6);
    wt << 2, 5, 6, 7, 8, 9;
    ok = ok && (sel.J * w) == wt;
    return {"worked example", ok, ok ? "w = [w1..w9], J matches" : "ordering or selector differs"};
}

// Collaboration and compression objectives against the explicit trace at random points.
inline CheckResult assembly_consistency(int points, std::uint64_t seed) {
    Rng rng(seed);
    double worst = 0.0;
    const Dimensions d{3, 3, 5, 3, 3};
    for (int batch = 0; batch < 5; ++batch) {
        const Topology topo = detail::random_topology(rng, d.M, d.N, 0.6);
        const SignalModel m = detail::random_model(rng, d, topo);
        const Matrix P = detail::random_spd(rng, d.P);
        const Matrix T = standard_normal(rng, d.P, d.S);
        const CompressionSet F = detail::random_compression(rng, d.M, d.L, 0.5);
        const Matrix W0 = detail::random_weights(rng, topo);
        const CollabProblem prob =
            assemble_collab_problem(P, m, topo, F, T, EnergyBudget::uniform(d.N, 1e12));
        for (int p = 0; p < points / 5; ++p) {
            const Matrix W = detail::random_weights(rng, topo);
            const Vector w = vectorize_weights(W, prob.map);
            const double value = prob.qcqp.objective(w) - prob.ridge * w.squaredNorm();
            worst = std::max(worst, detail::rel_err(value, detail::explicit_trace(P, m, W, F, T)));
        }
        for (int p = 0; p < points / 5; ++p) {
            const Index i = p % d.M;
            CompressionSet Fp = F;
            Fp.f[static_cast<size_t>(i)] = standard_normal(rng, d.L, 1);
            const ConvexQcqp q = assemble_centralized_fi(i, P, m, W0, T, F, 0.0, 1e12);
            const double value = q.objective(Fp.f[static_cast<size_t>(i)]);
            worst = std::max(worst, detail::rel_err(value, detail::explicit_trace(P, m, W0, Fp, T)));
        }
    }
    return {"assembly consistency", worst <= 1e-8,
            format_detail("%.0f points per problem, worst relative error %.3g", points, worst)};
}

namespace detail {

// Zooming grid search for a convex problem in two variables inside [-radius, radius]^2.
inline double grid_minimum(const ConvexQcqp& p, double radius) {
    double cx = 0.0, cy = 0.0, half = radius, best = std::numeric_limits<double>::infinity();
    const int n = 201;
    Vector x(2);
    for (int level = 0; level < 10; ++level) {
        double bx = cx, by = cy;
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
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

} // namespace detail

inline CheckResult convex_qcqp_oracle(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst_gap = 0.0, worst_violation = 0.0;
    for (int t = 0; t < instances; ++t) {
        ConvexQcqp p;
        p.Q0 = detail::random_spd(rng, 2);
        p.d = 3.0 * standard_normal(rng, 2, 1);
        const int m = 1 + t % 3;
        for (int i = 0; i < m; ++i) p.constraints.push_back({detail::random_spd(rng, 2, 0.05), 0.1, 0.6});
        const ConvexQcqpResult r = solve_convex_qcqp(p);
        // constraint eigenvalues >= 0.05 and slack 0.5 bound |x|^2 by 10
        const double oracle = detail::grid_minimum(p, std::sqrt(10.0));
        worst_gap = std::max(worst_gap, std::abs(r.objective - oracle));
        worst_violation = std::max(worst_violation, p.max_violation(r.x));
    }
    return {"convex QCQP vs grid oracle", worst_gap <= 1e-3 && worst_violation <= 1e-8,
            format_detail("%.0f instances, worst gap %.3g, worst violation %.3g", instances, worst_gap,
                          worst_violation)};
}

namespace detail {

// Symmetric with at least one eigenvalue of each sign.
inline Matrix random_indefinite(Rng& rng, Index n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(standard_normal(rng, n, n)));
    Vector lambda = es.eigenvalues();
    lambda(0) = -std::abs(lambda(0)) - 0.1;
    lambda(n - 1) = std::abs(lambda(n - 1)) + 0.1;
    return symmetrized(es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose());
}

} // namespace detail

inline CheckResult single_equality_qcqp(int instances, std::uint64_t seed) {
    Rng rng(seed);
    double worst_c = 0.0, worst_s = 0.0, worst_m1 = 0.0;
    int solved = 0;
    for (int t = 0; t < instances; ++t) {
        const Index n = 2 + t % 11;
        SingleEqualityQcqp p;
        p.Q1 = detail::random_spd(rng, n);
        p.Q2 = detail::random_indefinite(rng, n);
        p.ell = standard_normal(rng, n, 1);
        const SingleEqualityResult r = solve_single_equality_qcqp(p);
        if (r.which == EqualityCase::NoStationaryPoint) {
            worst_s = std::numeric_limits<double>::infinity();
            continue;
        }
        ++solved;
        worst_c = std::max(worst_c, r.constraint_residual);
        worst_s = std::max(worst_s, r.stationarity_residual);
    }
    const Dimensions d{3, 3, 4, 1, 3};
    for (int t = 0; t < 10; ++t) {
        const Topology topo = detail::random_topology(rng, d.M, d.N, 0.6);
        const SignalModel m = detail::random_model(rng, d, topo);
        const Matrix P = detail::random_spd(rng, d.P);
        const Matrix W = detail::random_weights(rng, topo);
        const CompressionSet F = detail::random_compression(rng, d.M, d.L, 0.5);
        const Matrix a = filter_gain_decentralized(P, m, W, F).T, b = filter_gain_closed_form(P, m, W, F).T;
        worst_m1 = std::max(worst_m1, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()));
    }
    const bool ok = solved == instances && worst_c <= 1e-8 && worst_s <= 1e-6 && worst_m1 <= 1e-8;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%d/%d solved, constraint %.3g, stationarity %.3g, single-sensor gap %.3g", solved,
                  instances, worst_c, worst_s, worst_m1);
    return {"single equality QCQP", ok, buf};
}

} // namespace colcomp::checks
