#pragma once

#include <vector>

#include <colcomp/linalg.hpp>
#include <colcomp/model.hpp>
#include <colcomp/types.hpp>

namespace colcomp {

// Bijection between the linked entries of an M x N collaboration matrix and a
// dense vector w of length U. Entries are ordered column-major, so w_u is the
// u-th linked entry met when scanning W column by column.
class WeightIndexMap {
public:
    struct Entry {
        Index row;
        Index col;
    };

    WeightIndexMap() = default;

    explicit WeightIndexMap(const Eigen::MatrixXi& mask) : rows_(mask.rows()), cols_(mask.cols()) {
        index_ = Eigen::MatrixXi::Constant(rows_, cols_, -1);
        for (Index n = 0; n < cols_; ++n)
            for (Index m = 0; m < rows_; ++m)
                if (mask(m, n) != 0) {
                    index_(m, n) = static_cast<int>(entries_.size());
                    entries_.push_back({m, n});
                }
    }

    explicit WeightIndexMap(const Topology& topo) : WeightIndexMap(topo.adjacency()) {}

    Index size() const { return static_cast<Index>(entries_.size()); }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    const std::vector<Entry>& entries() const { return entries_; }
    const Entry& entry(Index u) const { return entries_[static_cast<size_t>(u)]; }

    // Position of W(m, n) in w, or -1 when the entry is not linked.
    Index index_of(Index m, Index n) const { return index_(m, n); }

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<Entry> entries_;
    Eigen::MatrixXi index_;
};

inline Vector vectorize_weights(const Matrix& W, const WeightIndexMap& map) {
    if (W.rows() != map.rows() || W.cols() != map.cols())
        throw DimensionMismatch("collaboration matrix shape does not match the index map");
    for (Index m = 0; m < W.rows(); ++m)
        for (Index n = 0; n < W.cols(); ++n)
            if (map.index_of(m, n) < 0 && W(m, n) != 0.0)
                throw TopologyError("W(" + std::to_string(m) + "," + std::to_string(n)
                                    + ") is nonzero but not linked in the topology");
    Vector w(map.size());
    for (Index u = 0; u < map.size(); ++u) w(u) = W(map.entry(u).row, map.entry(u).col);
    return w;
}

inline Matrix devectorize_weights(const Vector& w, const WeightIndexMap& map) {
    if (w.size() != map.size()) throw DimensionMismatch("weight vector length must equal U");
    Matrix W = Matrix::Zero(map.rows(), map.cols());
    for (Index u = 0; u < map.size(); ++u) W(map.entry(u).row, map.entry(u).col) = w(u);
    return W;
}

// U x NL matrix A~ with w^T A~ = a^T (W kron I_L) for every conforming W.
// Row u is nonzero only on the L columns of sensor n_u.
inline Matrix row_lift(const Vector& a, const WeightIndexMap& map, Index L) {
    if (a.size() != map.rows() * L) throw DimensionMismatch("row_lift: a must have length M*L");
    Matrix out = Matrix::Zero(map.size(), map.cols() * L);
    for (Index u = 0; u < map.size(); ++u) {
        const auto& e = map.entry(u);
        out.block(u, e.col * L, 1, L) = a.segment(e.row * L, L).transpose();
    }
    return out;
}

// Symmetric U x U matrix E with w^T E w = tr[B (W kron I_L) C (W kron I_L)^T D].
// Shapes: B is r x ML, C is NL x NL, D is ML x r.
//
// Summing the row-wise lifts of B and D collapses to one ML x ML kernel
// K = D B, giving E(u, v) = sum_{l,l'} C(n_u L + l, n_v L + l') K(m_v L + l', m_u L + l).
inline Matrix quad_form_matrix(const Matrix& B, const Matrix& C, const Matrix& D,
                               const WeightIndexMap& map, Index L) {
    const Index ML = map.rows() * L, NL = map.cols() * L;
    if (B.cols() != ML || D.rows() != ML || B.rows() != D.cols() || C.rows() != NL || C.cols() != NL)
        throw DimensionMismatch("quad_form_matrix: B, C, D are not conformable");
    const Matrix K = D * B;
    const Index U = map.size();
    Matrix E(U, U);
    for (Index u = 0; u < U; ++u) {
        const auto& eu = map.entry(u);
        for (Index v = 0; v < U; ++v) {
            const auto& ev = map.entry(v);
            const auto c_blk = C.block(eu.col * L, ev.col * L, L, L);
            const auto k_blk = K.block(ev.row * L, eu.row * L, L, L);
            E(u, v) = c_blk.cwiseProduct(k_blk.transpose()).sum();
        }
    }
    return symmetrized(E);
}

// U-vector c~ with w^T c~ = tr[B (W kron I_L) C]. B is r x ML, C is NL x r.
inline Vector linear_form_vector(const Matrix& B, const Matrix& C, const WeightIndexMap& map, Index L) {
    const Index ML = map.rows() * L, NL = map.cols() * L;
    if (B.cols() != ML || C.rows() != NL || B.rows() != C.cols())
        throw DimensionMismatch("linear_form_vector: B and C are not conformable");
    const Matrix CB = C * B; // NL x ML
    Vector c(map.size());
    for (Index u = 0; u < map.size(); ++u) {
        const auto& e = map.entry(u);
        c(u) = CB.block(e.col * L, e.row * L, L, L).trace();
    }
    return c;
}

// Picks the off-diagonal weights (m_u != n_u) out of w, preserving their order.
struct OffDiagonalSelector {
    Matrix J;                    // s x U
    std::vector<Index> selected; // u for each row of J

    Index size() const { return static_cast<Index>(selected.size()); }
};

inline OffDiagonalSelector off_diagonal_selector(const WeightIndexMap& map) {
    OffDiagonalSelector out;
    for (Index u = 0; u < map.size(); ++u)
        if (map.entry(u).row != map.entry(u).col) out.selected.push_back(u);
    out.J = Matrix::Zero(out.size(), map.size());
    for (Index r = 0; r < out.size(); ++r) out.J(r, out.selected[static_cast<size_t>(r)]) = 1.0;
    return out;
}

// Index map over the links of W with the self-links removed.
inline WeightIndexMap off_diagonal_map(const Topology& topo) {
    Eigen::MatrixXi mask = topo.adjacency();
    for (Index i = 0; i < mask.rows(); ++i) mask(i, i) = 0;
    return WeightIndexMap(mask);
}

} // namespace colcomp
