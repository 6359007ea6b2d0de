#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <colcomp/linalg.hpp>
#include <colcomp/types.hpp>

namespace colcomp {

// ===========================================================================
// Convex QCQP
//
//   minimize   x^T Q0 x - 2 d^T x + offset
//   subject to x^T Q_i x + offset_i <= bound_i
//
// Q0 positive definite, every Q_i positive semidefinite, offset_i < bound_i so
// that x = 0 is strictly feasible.
// ===========================================================================

struct QuadraticConstraint {
    Matrix Q;
    double offset = 0.0;
    double bound = 0.0;

    double value(const Vector& x) const { return x.dot(Q * x) + offset; }
    double slack(const Vector& x) const { return bound - value(x); }
};

struct ConvexQcqp {
    Matrix Q0;
    Vector d;
    double offset = 0.0;
    std::vector<QuadraticConstraint> constraints;

    Index size() const { return d.size(); }
    double objective(const Vector& x) const { return x.dot(Q0 * x) - 2.0 * d.dot(x) + offset; }

    double max_violation(const Vector& x) const {
        double v = 0.0;
        for (const auto& c : constraints) v = std::max(v, -c.slack(x));
        return v;
    }
};

struct BarrierOptions {
    double t_initial = 1.0;
    double t_growth = 20.0;
    double gap_tol = 1e-9;  // stop once (#constraints) / t falls below this
    double armijo = 1e-4;
    double newton_tol = 1e-11; // half squared Newton decrement
    int max_newton_per_center = 100;
    int max_outer = 60;
};

enum class QcqpStatus {
    Optimal,              // barrier path followed to the duality-gap tolerance
    UnconstrainedOptimal, // unconstrained minimizer is strictly feasible
    IterationLimit,       // best feasible iterate returned
};

struct ConvexQcqpResult {
    Vector x;
    double objective = 0.0;
    QcqpStatus status = QcqpStatus::Optimal;
    std::vector<double> multipliers;
    double kkt_residual = 0.0;
    double duality_gap = 0.0;
    int newton_iterations = 0;
};

namespace detail {

inline void check_convex_qcqp_shapes(const ConvexQcqp& p) {
    const Index n = p.size();
    if (p.Q0.rows() != n || p.Q0.cols() != n) throw DimensionMismatch("QCQP: Q0 must be n x n");
    for (const auto& c : p.constraints)
        if (c.Q.rows() != n || c.Q.cols() != n) throw DimensionMismatch("QCQP: constraint matrix must be n x n");
}

inline double stationarity_residual(const ConvexQcqp& p, const Vector& x, const std::vector<double>& lam) {
    Vector g = 2.0 * (p.Q0 * x - p.d);
    for (size_t i = 0; i < p.constraints.size(); ++i) g += 2.0 * lam[i] * (p.constraints[i].Q * x);
    return g.norm() / std::max(1.0, 2.0 * p.d.norm());
}

} // namespace detail

// Log-barrier interior point method with damped Newton centering.
namespace detail {

// Barrier multipliers 1/(t s) carry the relative rounding error of a tiny slack.
// Re-solve stationarity by least squares over the constraints the barrier marks
// active; keep the barrier values if that yields a negative multiplier or a
// larger residual.
inline void refine_multipliers(const ConvexQcqp& p, const Vector& x, std::vector<double>& lambda) {
    double top = 0.0;
    for (double l : lambda) top = std::max(top, l);
    if (!(top > 0.0)) return;
    std::vector<size_t> active;
    for (size_t i = 0; i < lambda.size(); ++i)
        if (lambda[i] > 1e-6 * top) active.push_back(i);
    Matrix A(x.size(), static_cast<Index>(active.size()));
    for (size_t j = 0; j < active.size(); ++j) A.col(static_cast<Index>(j)) = p.constraints[active[j]].Q * x;
    const Vector rhs = p.d - p.Q0 * x;
    const Vector sol = A.colPivHouseholderQr().solve(rhs);
    if (!sol.allFinite() || sol.minCoeff() < 0.0) return;
    std::vector<double> refined(lambda.size(), 0.0);
    for (size_t j = 0; j < active.size(); ++j) refined[active[j]] = sol(static_cast<Index>(j));
    if (stationarity_residual(p, x, refined) <= stationarity_residual(p, x, lambda)) lambda = std::move(refined);
}

} // namespace detail

inline ConvexQcqpResult solve_convex_qcqp(const ConvexQcqp& problem, const BarrierOptions& opt = {}) {
    detail::check_convex_qcqp_shapes(problem);
    const Index n = problem.size();
    const auto& cons = problem.constraints;
    const size_t m = cons.size();
    for (size_t i = 0; i < m; ++i)
        if (!(cons[i].offset < cons[i].bound))
            throw InfeasibleStart("QCQP constraint " + std::to_string(i)
                                  + " is not strictly feasible at x = 0 (offset >= bound)");

    ConvexQcqpResult res;
    res.multipliers.assign(m, 0.0);

    // The unconstrained minimizer solves the problem outright when it is strictly feasible.
    Eigen::LLT<Matrix> q0_llt(problem.Q0);
    if (q0_llt.info() == Eigen::Success) {
        Vector xu = q0_llt.solve(problem.d);
        bool inside = xu.allFinite();
        for (size_t i = 0; i < m && inside; ++i) inside = cons[i].slack(xu) > 0.0;
        if (inside) {
            res.x = std::move(xu);
            res.objective = problem.objective(res.x);
            res.status = QcqpStatus::UnconstrainedOptimal;
            res.kkt_residual = detail::stationarity_residual(problem, res.x, res.multipliers);
            return res;
        }
    }
    if (m == 0) throw NotPositiveDefinite("Q0", min_eigenvalue(problem.Q0));

    Vector x = Vector::Zero(n);
    Vector slack(static_cast<Index>(m));
    Matrix qx(n, static_cast<Index>(m));  // column i holds Q_i x
    Matrix qs(n, static_cast<Index>(m));  // column i holds Q_i step
    Vector grad(n), step(n), q0x(n), q0s(n);
    Matrix hess(n, n);
    std::vector<double> a(m), b(m);
    Eigen::LLT<Matrix> llt(n);
    double t = opt.t_initial;
    bool path_done = false;

    for (int outer = 0; outer < opt.max_outer; ++outer) {
        bool centered = false;
        for (int it = 0; it < opt.max_newton_per_center; ++it) {
            q0x.noalias() = problem.Q0 * x;
            grad = (2.0 * t) * (q0x - problem.d);
            hess = (2.0 * t) * problem.Q0;
            for (size_t i = 0; i < m; ++i) {
                const auto col = static_cast<Index>(i);
                qx.col(col).noalias() = cons[i].Q * x;
                const double s = cons[i].bound - cons[i].offset - x.dot(qx.col(col));
                slack(col) = s;
                grad += (2.0 / s) * qx.col(col);
                hess += (2.0 / s) * cons[i].Q;
                hess.noalias() += (4.0 / (s * s)) * qx.col(col) * qx.col(col).transpose();
            }
            llt.compute(hess);
            if (llt.info() == Eigen::Success) step = llt.solve(-grad);
            else step = hess.ldlt().solve(-grad);
            const double slope = grad.dot(step);
            ++res.newton_iterations;
            if (!(slope < 0.0) || -slope / 2.0 <= opt.newton_tol) {
                centered = true;
                break;
            }

            // Exact change of the barrier function along the step, evaluated from
            // precomputed coefficients so large t does not swamp the decrease.
            q0s.noalias() = problem.Q0 * step;
            const double obj_lin = 2.0 * (q0x.dot(step) - problem.d.dot(step));
            const double obj_quad = step.dot(q0s);
            for (size_t i = 0; i < m; ++i) {
                const auto col = static_cast<Index>(i);
                qs.col(col).noalias() = cons[i].Q * step;
                a[i] = 2.0 * qx.col(col).dot(step);
                b[i] = step.dot(qs.col(col));
            }
            auto delta_phi = [&](double s, bool& feasible) {
                double val = t * (s * obj_lin + s * s * obj_quad);
                feasible = true;
                for (size_t i = 0; i < m; ++i) {
                    const double s0 = slack(static_cast<Index>(i));
                    const double s1 = s0 - s * a[i] - s * s * b[i];
                    if (!(s1 > 0.0)) {
                        feasible = false;
                        return 0.0;
                    }
                    val -= std::log1p((s1 - s0) / s0);
                }
                return val;
            };
            double s = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 80; ++ls, s *= 0.5) {
                bool feasible = false;
                const double dphi = delta_phi(s, feasible);
                if (feasible && dphi <= opt.armijo * s * slope) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                centered = true;
                break;
            }
            x += s * step;
        }
        if (!centered) res.status = QcqpStatus::IterationLimit;
        if (static_cast<double>(m) / t < opt.gap_tol) {
            path_done = true;
            break;
        }
        t *= opt.t_growth;
    }
    if (!path_done) res.status = QcqpStatus::IterationLimit;

    res.x = x;
    res.objective = problem.objective(x);
    for (size_t i = 0; i < m; ++i) res.multipliers[i] = 1.0 / (t * cons[i].slack(x));
    res.duality_gap = static_cast<double>(m) / t;
    detail::refine_multipliers(problem, x, res.multipliers);
    res.kkt_residual = detail::stationarity_residual(problem, x, res.multipliers);
    return res;
}

// ===========================================================================
// Single equality-constrained QCQP
//
//   minimize   t^T Q1 t - 2 ell^T t
//   subject to t^T Q2 t = 0
//
// Q1 positive definite, Q2 symmetric and possibly indefinite. Solved by
// simultaneous diagonalization and a scalar secular equation in the multiplier.
// ===========================================================================

struct SingleEqualityQcqp {
    Matrix Q1;
    Matrix Q2;
    Vector ell;

    double objective(const Vector& t) const { return t.dot(Q1 * t) - 2.0 * ell.dot(t); }
};

// transform * Q1 * transform^T = I and transform * Q2 * transform^T = diag(sigma),
// sigma sorted in descending order.
struct WhitenedPair {
    Matrix transform;
    Vector sigma;
};

inline WhitenedPair whiten_pair(const Matrix& Q1, const Matrix& Q2) {
    const Index n = Q1.rows();
    if (Q1.cols() != n || Q2.rows() != n || Q2.cols() != n)
        throw DimensionMismatch("whiten_pair: matrices must be square and equally sized");
    Eigen::SelfAdjointEigenSolver<Matrix> es1(symmetrized(Q1));
    const Vector delta = es1.eigenvalues();
    if (n == 0) return {Matrix(0, 0), Vector(0)};
    if (!(delta(0) > 1e-12 * std::max(delta(n - 1), 0.0)) || !(delta(n - 1) > 0.0))
        throw NotPositiveDefinite("Q1", delta(0));

    // V^{-1} = Sigma_1^{-1/2} U_1^T
    const Matrix v_inv = delta.cwiseSqrt().cwiseInverse().asDiagonal() * es1.eigenvectors().transpose();
    const Matrix s2 = symmetrized(v_inv * Q2 * v_inv.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es2(s2);

    WhitenedPair out;
    out.sigma = es2.eigenvalues().reverse();
    const Matrix u2 = es2.eigenvectors().rowwise().reverse();
    out.transform = u2.transpose() * v_inv;

    const Matrix id_err = out.transform * Q1 * out.transform.transpose() - identity(n);
    Matrix diag_err = out.transform * Q2 * out.transform.transpose();
    diag_err.diagonal() -= out.sigma;
    const double sig_scale = std::max(1.0, out.sigma.cwiseAbs().maxCoeff());
    if (id_err.cwiseAbs().maxCoeff() > 1e-10 || diag_err.cwiseAbs().maxCoeff() > 1e-10 * sig_scale)
        throw Error("whiten_pair: simultaneous diagonalization lost accuracy (Q1 ill conditioned)");
    return out;
}

// sum_i sigma_i m_i^2 / (1 + beta sigma_i)^2
inline double secular_function(double beta, const Vector& sigma, const Vector& m) {
    if (sigma.size() != m.size()) throw DimensionMismatch("secular_function: sigma and m differ in length");
    double h = 0.0;
    for (Index i = 0; i < sigma.size(); ++i) {
        const double den = 1.0 + beta * sigma(i);
        if (den == 0.0) throw Error("secular_function: beta sits on a pole");
        h += sigma(i) * m(i) * m(i) / (den * den);
    }
    return h;
}

enum class EqualityCase {
    Unconstrained,     // Q2 vanishes; plain minimizer
    Interior,          // I + beta Sigma positive definite, secular root by bisection
    Boundary,          // I + beta Sigma singular at an extreme eigenvalue
    NoStationaryPoint, // neither case admits a KKT point
};

struct SingleEqualityResult {
    Vector t;
    double beta = 0.0;
    EqualityCase which = EqualityCase::Unconstrained;
    int bisection_iterations = 0;
    double constraint_residual = 0.0;   // |t^T Q2 t| / (|t|^2 |Q2|)
    double stationarity_residual = 0.0; // |Q1 t - ell + beta Q2 t| / (|Q1||t| + |ell|)
};

struct SingleEqualityOptions {
    double tol = 1e-10;
    double pole_gap = 1e-9;    // closest relative approach to a pole while bracketing
    double zero_sigma = 1e-12; // |sigma| below this fraction of max |sigma| counts as zero
    int max_bisection = 200;
};

namespace detail {

inline void fill_residuals(const SingleEqualityQcqp& p, SingleEqualityResult& r) {
    const double tn = r.t.squaredNorm();
    const double q2n = p.Q2.norm();
    r.constraint_residual = (tn > 0.0 && q2n > 0.0) ? std::abs(r.t.dot(p.Q2 * r.t)) / (tn * q2n) : 0.0;
    if (std::isfinite(r.beta)) {
        const Vector g = p.Q1 * r.t - p.ell + r.beta * (p.Q2 * r.t);
        const double scale = p.Q1.norm() * std::sqrt(tn) + p.ell.norm();
        r.stationarity_residual = scale > 0.0 ? g.norm() / scale : g.norm();
    } else {
        r.stationarity_residual = std::numeric_limits<double>::infinity();
    }
}

} // namespace detail

inline SingleEqualityResult solve_single_equality_qcqp(const SingleEqualityQcqp& p,
                                                       const SingleEqualityOptions& opt = {}) {
    const Index n = p.ell.size();
    if (p.Q1.rows() != n || p.Q2.rows() != n) throw DimensionMismatch("single equality QCQP: shapes differ");
    const WhitenedPair wp = whiten_pair(p.Q1, symmetrized(p.Q2));
    const Vector m = wp.transform * p.ell;
    Vector sigma = wp.sigma;
    const double sig_max = n > 0 ? sigma.cwiseAbs().maxCoeff() : 0.0;
    for (Index i = 0; i < n; ++i)
        if (std::abs(sigma(i)) <= opt.zero_sigma * sig_max) sigma(i) = 0.0;

    SingleEqualityResult res;
    auto finish = [&](const Vector& r, double beta, EqualityCase which) {
        res.t = wp.transform.transpose() * r;
        res.beta = beta;
        res.which = which;
        detail::fill_residuals(p, res);
        return res;
    };

    if (sig_max == 0.0 || (sigma.array() == 0.0).all()) return finish(m, 0.0, EqualityCase::Unconstrained);

    const double pos = sigma.maxCoeff(); // sorted descending: sigma(0)
    const double neg = sigma.minCoeff();
    const double lo = pos > 0.0 ? -1.0 / pos : -std::numeric_limits<double>::infinity();
    const double hi = neg < 0.0 ? -1.0 / neg : std::numeric_limits<double>::infinity();
    double scale = 0.0;
    for (Index i = 0; i < n; ++i) scale += std::abs(sigma(i)) * m(i) * m(i);

    auto r_of = [&](double beta) {
        Vector r(n);
        for (Index i = 0; i < n; ++i) r(i) = m(i) / (1.0 + beta * sigma(i));
        return r;
    };

    // ---- Case one: bracket a sign change of the decreasing secular function.
    const double h0 = secular_function(0.0, sigma, m);
    if (std::abs(h0) <= opt.tol * scale) return finish(m, 0.0, EqualityCase::Interior);

    double a = 0.0, b = 0.0; // h(a) > 0 > h(b)
    bool bracketed = false;
    if (h0 > 0.0 && std::isfinite(hi)) {
        a = 0.0;
        for (double frac = 0.5;; frac *= 0.5) {
            const double gap = hi * frac;
            if (gap < opt.pole_gap * std::max(1.0, hi)) break;
            const double beta = hi - gap;
            if (secular_function(beta, sigma, m) < 0.0) {
                b = beta;
                bracketed = true;
                break;
            }
            a = beta;
        }
    } else if (h0 < 0.0 && std::isfinite(lo)) {
        b = 0.0;
        for (double frac = 0.5;; frac *= 0.5) {
            const double gap = -lo * frac;
            if (gap < opt.pole_gap * std::max(1.0, -lo)) break;
            const double beta = lo + gap;
            if (secular_function(beta, sigma, m) > 0.0) {
                a = beta;
                bracketed = true;
                break;
            }
            b = beta;
        }
    }

    if (bracketed) {
        double ha = secular_function(a, sigma, m), hb = secular_function(b, sigma, m);
        int it = 0;
        for (; it < opt.max_bisection; ++it) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            const double hm = secular_function(mid, sigma, m);
            if (hm == 0.0) {
                a = b = mid;
                ha = hb = 0.0;
                break;
            }
            if (hm > 0.0) {
                a = mid;
                ha = hm;
            } else {
                b = mid;
                hb = hm;
            }
        }
        res.bisection_iterations = it;
        const double beta = std::abs(ha) <= std::abs(hb) ? a : b;
        return finish(r_of(beta), beta, EqualityCase::Interior);
    }

    // ---- Case two: I + beta Sigma singular at beta = -1/sigma_max or -1/sigma_min.
    const double m_scale = m.norm();
    bool have = false;
    Vector best_r;
    double best_obj = 0.0, best_beta = 0.0;
    for (const double beta : {lo, hi}) {
        if (!std::isfinite(beta)) continue;
        Vector r = Vector::Zero(n);
        std::vector<Index> singular;
        double weighted = 0.0, sigma_sing = 0.0;
        bool ok = true;
        for (Index i = 0; i < n; ++i) {
            const double den = 1.0 + beta * sigma(i);
            if (std::abs(den) <= 1e-12) {
                singular.push_back(i);
                sigma_sing = sigma(i);
                if (std::abs(m(i)) > 1e-6 * m_scale) ok = false;
            } else {
                r(i) = m(i) / den;
                weighted += sigma(i) * r(i) * r(i);
            }
        }
        if (!ok || singular.empty()) continue;
        const double need = -weighted / sigma_sing;
        if (need < -opt.tol * std::max(1.0, r.squaredNorm())) continue;
        r(singular.front()) = std::sqrt(std::max(need, 0.0));
        const double obj = r.squaredNorm() - 2.0 * m.dot(r);
        if (!have || obj < best_obj) {
            have = true;
            best_r = r;
            best_obj = obj;
            best_beta = beta;
        }
    }
    if (have) return finish(best_r, best_beta, EqualityCase::Boundary);

    // No KKT point. When sigma is one-signed the feasible set is the null space
    // of Sigma; return the minimizer over it as the best feasible point.
    Vector r = Vector::Zero(n);
    for (Index i = 0; i < n; ++i)
        if (sigma(i) == 0.0) r(i) = m(i);
    const double beta_inf = (neg < 0.0) ? -std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::infinity();
    return finish(r, beta_inf, EqualityCase::NoStationaryPoint);
}

} // namespace colcomp
