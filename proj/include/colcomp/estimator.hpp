#pragma once

#include <cmath>

#include <colcomp/linalg.hpp>
#include <colcomp/model.hpp>
#include <colcomp/types.hpp>

namespace colcomp {

struct EstimatorState {
    Vector x_hat;
    Matrix P;
    Index k = 0;

    static EstimatorState prior(const Vector& x0, const Matrix& Rx) { return {x0, Rx, 0}; }
};

// Joseph form: (I - T D) P (I - T D)^T + T Rn T^T. Valid for any gain T.
inline Matrix joseph_covariance(const Matrix& P, const Matrix& D, const Matrix& Rn, const Matrix& T) {
    const Index p = P.rows();
    const Matrix itd = identity(p) - T * D;
    return symmetrized(itd * P * itd.transpose() + T * Rn * T.transpose());
}

inline void check_state(const EstimatorState& s) {
    if (s.P.rows() != s.x_hat.size() || s.P.cols() != s.x_hat.size())
        throw DimensionMismatch("estimator state: P must be P x P with P = length of x_hat");
}

inline EstimatorState rlmmse_step(const EstimatorState& state, const Vector& q, const Matrix& D,
                                  const Matrix& Rn, const Matrix& T) {
    check_state(state);
    const Index p = state.x_hat.size(), s = q.size();
    if (D.rows() != s || D.cols() != p || Rn.rows() != s || Rn.cols() != s || T.rows() != p || T.cols() != s)
        throw DimensionMismatch("rlmmse_step: q, D, Rn, T shapes do not conform");
    EstimatorState next;
    next.x_hat = state.x_hat + T * (q - D * state.x_hat);
    next.P = joseph_covariance(state.P, D, Rn, T);
    next.k = state.k + 1;
    return next;
}

// LMMSE update that sees every raw observation y = H x + v.
inline EstimatorState benchmark_step(const EstimatorState& state, const Vector& y, const Matrix& H,
                                     const Matrix& Rv) {
    check_state(state);
    if (H.cols() != state.x_hat.size() || H.rows() != y.size() || Rv.rows() != y.size())
        throw DimensionMismatch("benchmark_step: y, H, Rv shapes do not conform");
    const Matrix PHt = state.P * H.transpose();
    const Matrix innovation = symmetrized(H * PHt + Rv);
    const Matrix T = spd_solve(innovation, PHt.transpose()).transpose();
    EstimatorState next;
    next.x_hat = state.x_hat + T * (y - H * state.x_hat);
    next.P = symmetrized(state.P - T * H * state.P);
    next.k = state.k + 1;
    return next;
}

inline double mse_trace(const EstimatorState& state) { return state.P.trace(); }

// tr P(k) reached from P_prev with design (W, F, T) in the current model.
inline double design_mse(const Matrix& P_prev, const SignalModel& model, const Matrix& W,
                         const CompressionSet& F, const Matrix& T) {
    const FcMeasurement fc = fc_measurement(model, W, F.matrix());
    return joseph_covariance(P_prev, fc.D, fc.Rn, T).trace();
}

// Per-step check of the strict MSE decrease under the closed-form gain and its
// lower bound lambda_min(P)^2 * lambda_min(Ra) * ||D||_F^2 with
// Ra = (D P D^T + Rn)^{-1}.
struct MonotonicityDiagnostic {
    double decrease = 0.0;
    double bound = 0.0;
    bool violated = false;
};

inline MonotonicityDiagnostic monotonicity_check(double phi_prev, double phi_curr, const Matrix& D,
                                                 const Matrix& P_prev, const Matrix& Rn,
                                                 double rel_tol = 1e-8) {
    MonotonicityDiagnostic out;
    out.decrease = phi_prev - phi_curr;
    const double lam_p = std::max(min_eigenvalue(P_prev), 0.0);
    const double lam_ra = 1.0 / max_eigenvalue(D * P_prev * D.transpose() + Rn);
    out.bound = lam_p * lam_p * lam_ra * D.squaredNorm();
    out.violated = out.decrease < out.bound - rel_tol * std::max(std::abs(phi_prev), out.bound);
    return out;
}

inline EstimatorState kalman_predict(const EstimatorState& state, const StateModel& sm) {
    check_state(state);
    const Index p = state.x_hat.size();
    if (sm.transition.rows() != p || sm.transition.cols() != p || sm.noise_cov.rows() != p
        || sm.noise_cov.cols() != p)
        throw DimensionMismatch("kalman_predict: state model must be P x P");
    EstimatorState pred;
    pred.x_hat = sm.transition * state.x_hat;
    pred.P = symmetrized(sm.transition * state.P * sm.transition.transpose() + sm.noise_cov);
    pred.k = state.k;
    return pred;
}

inline EstimatorState kalman_update(const EstimatorState& predicted, const Vector& q, const Matrix& D,
                                    const Matrix& Rn, const Matrix& T) {
    return rlmmse_step(predicted, q, D, Rn, T);
}

} // namespace colcomp
