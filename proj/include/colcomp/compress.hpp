#pragma once

#include <optional>
#include <string>

#include <colcomp/estimator.hpp>
#include <colcomp/linalg.hpp>
#include <colcomp/model.hpp>
#include <colcomp/qcqp.hpp>

namespace colcomp {

// Gain applied by the FC to the compressed superposition q(k).
struct FilterGain {
    Matrix T;
    EqualityCase which = EqualityCase::Unconstrained;
    bool fell_back = false;          // decentralized solve had no stationary point; closed form used
    double constraint_residual = 0.0; // |tr(T B T^T)| / (|T|^2 |B|), decentralized only

    Vector vec() const { return Eigen::Map<const Vector>(T.data(), T.size()); }
};

namespace detail {

// Rows i*L .. i*L+L-1 of (W kron I_L), i.e. W_i = e_i^T W kron I_L.
inline Matrix sensor_rows(const Matrix& W, Index i, Index L) { return kron(W.row(i), identity(L)); }

inline void check_fi_inputs(Index i, const Matrix& P_prev, const SignalModel& model, const Matrix& W,
                            const Matrix& T) {
    const Index L = model.L();
    if (i < 0 || i >= model.M()) throw DimensionMismatch("compression: sensor index must be < M");
    if (W.rows() != model.M() || W.cols() != model.N()) throw DimensionMismatch("compression: W must be M x N");
    if (P_prev.rows() != model.H.cols() || T.rows() != P_prev.rows() || T.cols() != model.G.rows())
        throw DimensionMismatch("compression: P_prev must be P x P and T must be P x S");
    if (model.H.rows() != model.N() * L) throw DimensionMismatch("compression: H must be NL x P");
}

// Constraint f^T (W_i Ry W_i^T + Ralpha_i) f + collab_i <= mu_i and the PSD objective
// matrix pi_ii (W_i Q W_i^T + Ralpha_i), ridged when degenerate.
inline void fill_fi_common(ConvexQcqp& q, Index i, const Matrix& Q, const SignalModel& model,
                           const Matrix& Wi, double pi_ii, double collab_cost, double mu) {
    const Index L = model.L();
    const Matrix& Ra = model.Ralpha_blocks[static_cast<size_t>(i)];
    QuadraticConstraint c;
    c.Q = symmetrized(Wi * model.Ry() * Wi.transpose() + Ra);
    c.offset = collab_cost;
    c.bound = mu;
    if (!(collab_cost < mu)) throw BudgetExhausted(i, collab_cost, mu);

    q.Q0 = symmetrized(pi_ii * (Wi * Q * Wi.transpose() + Ra));
    const double avg = q.Q0.trace() / static_cast<double>(L);
    if (!(min_eigenvalue(q.Q0) > 1e-12 * avg) || !(avg > 0.0))
        q.Q0.diagonal().array() += 1e-10 * c.Q.trace() / static_cast<double>(L);
    q.constraints.push_back(std::move(c));
}

} // namespace detail

// Sub-problem in f_i with every other design variable fixed. The objective equals
// tr P(k) exactly (offset taken at f_i = 0).
inline ConvexQcqp assemble_centralized_fi(Index i, const Matrix& P_prev, const SignalModel& model,
                                          const Matrix& W, const Matrix& T, const CompressionSet& F,
                                          double collab_cost, double mu) {
    detail::check_fi_inputs(i, P_prev, model, W, T);
    const Index L = model.L(), M = model.M();
    if (F.M() != M || F.L() != L) throw DimensionMismatch("compression: F must hold M vectors of length L");

    const Matrix Q = model.H * P_prev * model.H.transpose() + model.Rv;
    const Matrix TG = T * model.G;
    const Matrix pi = TG.transpose() * TG;
    const Matrix Wi = detail::sensor_rows(W, i, L);

    ConvexQcqp q;
    detail::fill_fi_common(q, i, Q, model, Wi, pi(i, i), collab_cost, mu);
    q.d = Wi * model.H * P_prev * TG.col(i);
    for (Index j = 0; j < M; ++j) {
        if (j == i) continue;
        const Matrix Wj = detail::sensor_rows(W, j, L);
        q.d -= pi(i, j) * (Wi * Q * Wj.transpose() * F.f[static_cast<size_t>(j)]);
    }

    CompressionSet F0 = F;
    F0.f[static_cast<size_t>(i)].setZero();
    q.offset = design_mse(P_prev, model, W, F0, T);
    return q;
}

// Local variant: drops the coupling to the other sensors' f_j, so only P_prev, H,
// row i of W, T, g_i and the noise statistics enter. The offset is left at zero.
inline ConvexQcqp assemble_decentralized_fi(Index i, const Matrix& P_prev, const SignalModel& model,
                                            const Matrix& W, const Matrix& T, double collab_cost,
                                            double mu) {
    detail::check_fi_inputs(i, P_prev, model, W, T);
    const Index L = model.L();
    const Matrix Wi = detail::sensor_rows(W, i, L);
    const Vector Tg = T * model.G.col(i);
    const Matrix Q = model.H * P_prev * model.H.transpose() + model.Rv;

    ConvexQcqp q;
    detail::fill_fi_common(q, i, Q, model, Wi, Tg.squaredNorm(), collab_cost, mu);
    q.d = Wi * model.H * P_prev * Tg;
    q.offset = 0.0;
    return q;
}

struct SweepReport {
    CompressionSet F;
    double mse_before = 0.0;
    double mse_after = 0.0;
};

inline Vector collab_costs(const Matrix& W, const SignalModel& model, const Topology& topo) {
    Vector out(topo.cols());
    for (Index i = 0; i < topo.cols(); ++i) out(i) = expected_collab_cost(i, W, model, topo);
    return out;
}

// Gauss-Seidel over f_0 .. f_{M-1}. A new f_i is kept only when it does not raise
// tr P(k), so the sweep is monotone even at solver tolerance.
inline SweepReport sweep_centralized(const Matrix& P_prev, const SignalModel& model, const Topology& topo,
                                     const Matrix& W, const Matrix& T, const CompressionSet& F_init,
                                     const EnergyBudget& budget, int sweeps = 1,
                                     const BarrierOptions& opt = {}) {
    const Vector collab = collab_costs(W, model, topo);
    SweepReport out;
    out.F = F_init;
    out.mse_before = design_mse(P_prev, model, W, F_init, T);
    double current = out.mse_before;
    for (int s = 0; s < sweeps; ++s) {
        for (Index i = 0; i < model.M(); ++i) {
            const ConvexQcqp q = assemble_centralized_fi(i, P_prev, model, W, T, out.F, collab(i), budget.mu(i));
            const ConvexQcqpResult r = solve_convex_qcqp(q, opt);
            if (r.objective <= current && q.max_violation(r.x) <= 0.0) {
                out.F.f[static_cast<size_t>(i)] = r.x;
                current = r.objective;
            }
        }
    }
    out.mse_after = design_mse(P_prev, model, W, out.F, T);
    return out;
}

// One independent local solve per sensor.
inline CompressionSet local_compression(const Matrix& P_prev, const SignalModel& model, const Topology& topo,
                                        const Matrix& W, const Matrix& T, const EnergyBudget& budget,
                                        const BarrierOptions& opt = {}) {
    const Vector collab = collab_costs(W, model, topo);
    CompressionSet F = CompressionSet::zeros(model.M(), model.L());
    for (Index i = 0; i < model.M(); ++i) {
        const ConvexQcqp q = assemble_decentralized_fi(i, P_prev, model, W, T, collab(i), budget.mu(i));
        F.f[static_cast<size_t>(i)] = solve_convex_qcqp(q, opt).x;
    }
    return F;
}

// T = P D^T (D P D^T + Rn)^{-1}.
inline FilterGain filter_gain_closed_form(const Matrix& P_prev, const SignalModel& model, const Matrix& W,
                                          const CompressionSet& F) {
    const FcMeasurement fc = fc_measurement(model, W, F.matrix());
    const Matrix innovation = symmetrized(fc.D * P_prev * fc.D.transpose() + fc.Rn);
    require_positive_definite(innovation, "innovation covariance D P D^T + Rn");
    const Matrix PDt = P_prev * fc.D.transpose();
    FilterGain g;
    g.T = spd_solve(innovation, PDt.transpose()).transpose();
    return g;
}

// Gain design restricted to tr(T B T^T) = 0, where B sums the cross-sensor
// couplings Lambda_i. In vec form: minimize t^T Q1 t - 2 ell^T t s.t. t^T Q2 t = 0
// with Q1 = (D P D^T + Rn) kron I_P, Q2 = sym(B) kron I_P, ell = vec(P D^T).
struct DecentralizedGainProblem {
    SingleEqualityQcqp qcqp;
    Matrix B;                    // S x S, symmetric
    std::vector<Matrix> Lambda;  // one per communicating sensor
    double trace_prev = 0.0;     // tr P(k-1), so tr P(k) = objective + trace_prev
};

inline DecentralizedGainProblem assemble_decentralized_gain(const Matrix& P_prev, const SignalModel& model,
                                                            const Matrix& W, const CompressionSet& F) {
    const Index L = model.L(), M = model.M(), S = model.G.rows(), Pd = P_prev.rows();
    const FcMeasurement fc = fc_measurement(model, W, F.matrix());
    const Matrix Q = model.H * P_prev * model.H.transpose() + model.Rv;

    // c_ij = f_i^T W_i Q W_j^T f_j
    std::vector<Vector> a(static_cast<size_t>(M));
    for (Index i = 0; i < M; ++i)
        a[static_cast<size_t>(i)] = detail::sensor_rows(W, i, L).transpose() * F.f[static_cast<size_t>(i)];

    DecentralizedGainProblem out;
    out.B = Matrix::Zero(S, S);
    for (Index i = 0; i < M; ++i) {
        Matrix lam = Matrix::Zero(S, S);
        const Vector Qai = Q * a[static_cast<size_t>(i)];
        for (Index j = 0; j < M; ++j) {
            if (j == i) continue;
            const double c = Qai.dot(a[static_cast<size_t>(j)]);
            lam += c * model.G.col(i) * model.G.col(j).transpose();
        }
        out.B += lam;
        out.Lambda.push_back(std::move(lam));
    }
    out.B = symmetrized(out.B);

    const Matrix innovation = symmetrized(fc.D * P_prev * fc.D.transpose() + fc.Rn);
    out.qcqp.Q1 = kron(innovation, identity(Pd));
    out.qcqp.Q2 = kron(out.B, identity(Pd));
    const Matrix PDt = P_prev * fc.D.transpose();
    out.qcqp.ell = Eigen::Map<const Vector>(PDt.data(), PDt.size());
    out.trace_prev = P_prev.trace();
    return out;
}

inline FilterGain filter_gain_decentralized(const Matrix& P_prev, const SignalModel& model, const Matrix& W,
                                            const CompressionSet& F, const SingleEqualityOptions& opt = {}) {
    const DecentralizedGainProblem prob = assemble_decentralized_gain(P_prev, model, W, F);
    const Index Pd = P_prev.rows(), S = model.G.rows();
    const SingleEqualityResult r = solve_single_equality_qcqp(prob.qcqp, opt);
    if (r.which == EqualityCase::NoStationaryPoint) {
        FilterGain g = filter_gain_closed_form(P_prev, model, W, F);
        g.which = r.which;
        g.fell_back = true;
        return g;
    }
    FilterGain g;
    g.T = Eigen::Map<const Matrix>(r.t.data(), Pd, S);
    g.which = r.which;
    const double bn = prob.B.norm(), tn = g.T.squaredNorm();
    g.constraint_residual = (bn > 0.0 && tn > 0.0) ? std::abs((g.T * prob.B * g.T.transpose()).trace()) / (tn * bn)
                                                  : 0.0;
    return g;
}

} // namespace colcomp
