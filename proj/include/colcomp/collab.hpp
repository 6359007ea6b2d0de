#pragma once

#include <optional>

#include <colcomp/kronmap.hpp>
#include <colcomp/linalg.hpp>
#include <colcomp/model.hpp>
#include <colcomp/qcqp.hpp>

namespace colcomp {

// Collaboration design at one time step as a convex QCQP over the linked
// weights w. The objective equals tr P(k) for the fixed (F, T); constraint i is
// the total expected energy of sensor i.
struct CollabProblem {
    ConvexQcqp qcqp;
    WeightIndexMap map;
    double ridge = 0.0; // added to the objective matrix when it is numerically singular
};

struct CollabOptions {
    bool check_definiteness = true;
};

inline CollabProblem assemble_collab_problem(const Matrix& P_prev, const SignalModel& model,
                                             const Topology& topo, const CompressionSet& F,
                                             const Matrix& T, const EnergyBudget& budget,
                                             const CollabOptions& opt = {}) {
    const Index L = model.L(), M = topo.rows(), N = topo.cols();
    if (F.M() != M || (M > 0 && F.L() != L)) throw DimensionMismatch("collab: F must hold M vectors of length L");
    if (budget.mu.size() != N) throw DimensionMismatch("collab: budget must have N entries");
    if (T.rows() != P_prev.rows() || T.cols() != model.G.rows()) throw DimensionMismatch("collab: T must be P x S");

    CollabProblem out;
    out.map = WeightIndexMap(topo);
    const Index U = out.map.size();
    auto& q = out.qcqp;

    const Matrix Fm = F.matrix();
    const Matrix B0 = T * model.G * Fm;                               // P x ML
    const Matrix C0 = model.H * P_prev * model.H.transpose() + model.Rv; // NL x NL
    q.Q0 = quad_form_matrix(B0, C0, B0.transpose(), out.map, L);
    q.d = linear_form_vector(B0, model.H * P_prev, out.map, L);
    q.offset = P_prev.trace() + (T * model.Reps * T.transpose()).trace()
               + (B0 * model.Ralpha * B0.transpose()).trace();

    const double avg = q.Q0.trace() / static_cast<double>(std::max<Index>(U, 1));
    if (U > 0 && !(min_eigenvalue(q.Q0) > 1e-12 * avg)) {
        out.ridge = 1e-10 * std::max(avg, 1e-12);
        q.Q0.diagonal().array() += out.ridge;
    }

    // Collaboration energy: tr(Ry_i) * w~^T E_i w~ with w~ = J w the off-diagonal weights.
    const WeightIndexMap off = off_diagonal_map(topo);
    const OffDiagonalSelector sel = off_diagonal_selector(out.map);
    const Matrix IM = identity(M);
    const Matrix Rya = model.Ry();

    for (Index i = 0; i < N; ++i) {
        Matrix ei_ei = Matrix::Zero(N, N);
        ei_ei(i, i) = 1.0;
        const Matrix Ei = quad_form_matrix(IM, ei_ei, IM, off, 1);
        QuadraticConstraint c;
        c.Q = model.Ry_block(i).trace() * (sel.J.transpose() * Ei * sel.J);
        c.bound = budget.mu(i);
        if (i < M) {
            const Vector& fi = F.f[static_cast<size_t>(i)];
            Vector b = Vector::Zero(M * L);
            b.segment(i * L, L) = fi;
            c.Q += quad_form_matrix(b * b.transpose(), Rya, identity(M * L), out.map, L);
            c.offset = fi.dot(model.Ralpha_blocks[static_cast<size_t>(i)] * fi);
            if (!(c.offset < c.bound))
                throw InfeasibleStart("compression alone spends the budget of sensor " + std::to_string(i));
        }
        if (opt.check_definiteness && !is_positive_semidefinite(c.Q))
            throw NotPositiveDefinite("collaboration energy matrix of sensor " + std::to_string(i),
                                      min_eigenvalue(c.Q));
        q.constraints.push_back(std::move(c));
    }
    return out;
}

struct CollabSolution {
    Matrix W;
    Vector w;
    double objective = 0.0;
    QcqpStatus status = QcqpStatus::Optimal;
    bool monotone = true; // objective did not exceed the one at the feasible warm-start hint
};

inline CollabSolution solve_collaboration(const CollabProblem& problem,
                                          const std::optional<Vector>& previous = std::nullopt,
                                          const BarrierOptions& opt = {}) {
    const ConvexQcqpResult r = solve_convex_qcqp(problem.qcqp, opt);
    CollabSolution out;
    out.w = r.x;
    out.W = devectorize_weights(r.x, problem.map);
    out.objective = r.objective;
    out.status = r.status;
    if (previous && previous->size() == r.x.size() && problem.qcqp.max_violation(*previous) <= 0.0) {
        const double prev = problem.qcqp.objective(*previous);
        out.monotone = out.objective <= prev + 1e-9 * std::max(1.0, std::abs(prev));
    }
    return out;
}

} // namespace colcomp
