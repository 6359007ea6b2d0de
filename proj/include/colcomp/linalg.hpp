#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <colcomp/types.hpp>

namespace colcomp {

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

inline double min_eigenvalue(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double max_eigenvalue(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

inline Matrix block_diagonal(const std::vector<Matrix>& blocks) {
    Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

// Scale-aware positive definiteness: min eigenvalue must exceed
// 1e-12 * trace / dimension.
inline bool is_positive_definite(const Matrix& a, double rel_tol = 1e-12) {
    if (a.rows() != a.cols() || a.rows() == 0) return false;
    if ((a - a.transpose()).norm() > 1e-10 * std::max(1.0, a.norm())) return false;
    const double scale = a.trace() / static_cast<double>(a.rows());
    return scale > 0.0 && min_eigenvalue(a) > rel_tol * scale;
}

inline void require_positive_definite(const Matrix& a, const std::string& name,
                                      double rel_tol = 1e-12) {
    if (a.rows() != a.cols()) throw DimensionMismatch("matrix '" + name + "' is not square");
    if (!is_positive_definite(a, rel_tol)) throw NotPositiveDefinite(name, min_eigenvalue(a));
}

// PSD up to roundoff relative to the largest eigenvalue magnitude.
inline bool is_positive_semidefinite(const Matrix& a, double rel_tol = 1e-10) {
    if (a.rows() != a.cols()) return false;
    if (a.size() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    return ev(0) >= -rel_tol * scale;
}

// Solves S X = B for symmetric positive definite S, falling back to a
// pivoted LDLT when the Cholesky factorization breaks down.
inline Matrix spd_solve(const Matrix& s, const Matrix& b) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    return s.ldlt().solve(b);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Isotropic noise variance for a signal-to-noise ratio given in dB: 1 / SNR.
inline double noise_variance_from_snr_db(double db) { return 1.0 / db_to_linear(db); }

} // namespace colcomp
