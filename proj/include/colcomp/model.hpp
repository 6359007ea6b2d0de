#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include <colcomp/linalg.hpp>
#include <colcomp/types.hpp>

namespace colcomp {

// Problem sizes. P: parameter length, L: per-sensor observation length,
// N: sensors, M: sensors that talk to the fusion center, S: FC antennas.
struct Dimensions {
    Index P = 1;
    Index L = 1;
    Index N = 1;
    Index M = 1;
    Index S = 1;

    void validate() const {
        if (P < 1 || L < 1 || N < 1 || M < 1 || S < 1)
            throw DimensionMismatch("all dimensions must be >= 1");
        if (M > N) throw DimensionMismatch("M (communicating sensors) must not exceed N");
    }
};

// Binary M x N collaboration topology. Row i lists which sensors feed
// communicating sensor i. Sensors 0..M-1 are the communicating ones.
class Topology {
public:
    Topology() = default;

    explicit Topology(Eigen::MatrixXi adjacency) : adjacency_(std::move(adjacency)) { validate(); }

    static Topology full(Index m, Index n) { return Topology(Eigen::MatrixXi::Ones(m, n)); }

    static Topology self_only(Index m, Index n) {
        Eigen::MatrixXi a = Eigen::MatrixXi::Zero(m, n);
        for (Index i = 0; i < m; ++i) a(i, i) = 1;
        return Topology(std::move(a));
    }

    void validate() const {
        if (adjacency_.rows() < 1 || adjacency_.cols() < adjacency_.rows())
            throw TopologyError("adjacency must be M x N with 1 <= M <= N");
        for (Index i = 0; i < adjacency_.rows(); ++i) {
            for (Index j = 0; j < adjacency_.cols(); ++j) {
                const int v = adjacency_(i, j);
                if (v != 0 && v != 1) throw TopologyError("adjacency entries must be 0 or 1");
            }
            if (adjacency_(i, i) != 1)
                throw TopologyError("adjacency diagonal A(" + std::to_string(i) + ","
                                    + std::to_string(i) + ") must be 1");
        }
    }

    Index rows() const { return adjacency_.rows(); }
    Index cols() const { return adjacency_.cols(); }
    const Eigen::MatrixXi& adjacency() const { return adjacency_; }
    bool linked(Index i, Index j) const { return adjacency_(i, j) == 1; }

    // Neighbors of communicating sensor i, excluding itself.
    std::vector<Index> neighbors(Index i) const {
        std::vector<Index> out;
        for (Index j = 0; j < cols(); ++j)
            if (j != i && adjacency_(i, j) == 1) out.push_back(j);
        return out;
    }

    // 1_M 1_N^T - [I_M, 0]: marks the entries of W that cost collaboration energy.
    Matrix collaboration_mask() const {
        Matrix mask = Matrix::Ones(rows(), cols());
        for (Index i = 0; i < rows(); ++i) mask(i, i) = 0.0;
        return mask;
    }

    // Throws when W has a nonzero where the topology has no link.
    void require_conforming(const Matrix& w) const {
        if (w.rows() != rows() || w.cols() != cols())
            throw DimensionMismatch("collaboration matrix shape does not match topology");
        for (Index i = 0; i < rows(); ++i)
            for (Index j = 0; j < cols(); ++j)
                if (adjacency_(i, j) == 0 && w(i, j) != 0.0)
                    throw TopologyError("collaboration weight W(" + std::to_string(i) + ","
                                        + std::to_string(j) + ") set where topology has no link");
    }

private:
    Eigen::MatrixXi adjacency_;
};

// State transition for the tracking extension: x(k) = A_s x(k-1) + n_s.
struct StateModel {
    Matrix transition;
    Matrix noise_cov;
};

// Second-order description of one time step: prior, observation and channel
// matrices, and every noise covariance. Aggregates Rv and Ralpha are filled in
// by validate_model.
struct SignalModel {
    Vector x0;
    Matrix Rx;
    Matrix H; // NL x P, sensor blocks stacked
    Matrix G; // S x M, column i is sensor i's channel to the FC antennas
    std::vector<Matrix> Rv_blocks;     // N blocks, L x L
    std::vector<Matrix> Ralpha_blocks; // M blocks, L x L
    Matrix Reps;                       // S x S
    Matrix Rv;                         // NL x NL block diagonal
    Matrix Ralpha;                     // ML x ML block diagonal

    Index L() const { return Rv_blocks.empty() ? 0 : Rv_blocks.front().rows(); }
    Index N() const { return static_cast<Index>(Rv_blocks.size()); }
    Index M() const { return static_cast<Index>(Ralpha_blocks.size()); }

    Matrix H_block(Index i) const { return H.middleRows(i * L(), L()); }

    // Covariance of sensor i's raw observation: H_i Rx H_i^T + Rv_i.
    Matrix Ry_block(Index i) const {
        const Matrix hi = H_block(i);
        return hi * Rx * hi.transpose() + Rv_blocks[static_cast<size_t>(i)];
    }

    // Joint covariance of the stacked observations: H Rx H^T + Rv.
    Matrix Ry() const { return H * Rx * H.transpose() + Rv; }
};

// Per-sensor expected-energy caps.
struct EnergyBudget {
    Vector mu;

    static EnergyBudget uniform(Index n, double value) { return {Vector::Constant(n, value)}; }
};

// Scalar compression vectors f_i of the M communicating sensors.
struct CompressionSet {
    std::vector<Vector> f;

    Index M() const { return static_cast<Index>(f.size()); }
    Index L() const { return f.empty() ? 0 : f.front().size(); }

    // Block diagonal M x ML matrix with rows f_i^T.
    Matrix matrix() const {
        const Index m = M(), l = L();
        Matrix out = Matrix::Zero(m, m * l);
        for (Index i = 0; i < m; ++i) out.block(i, i * l, 1, l) = f[static_cast<size_t>(i)].transpose();
        return out;
    }

    static CompressionSet zeros(Index m, Index l) {
        return {std::vector<Vector>(static_cast<size_t>(m), Vector::Zero(l))};
    }
};

inline SignalModel validate_model(SignalModel model, const Dimensions& dims, const Topology& topo) {
    dims.validate();
    topo.validate();
    const auto P = dims.P, L = dims.L, N = dims.N, M = dims.M, S = dims.S;
    auto shape = [](const Matrix& a, Index r, Index c, const std::string& name) {
        if (a.rows() != r || a.cols() != c) {
            std::ostringstream os;
            os << name << " is " << a.rows() << "x" << a.cols() << ", expected " << r << "x" << c;
            throw DimensionMismatch(os.str());
        }
    };
    if (topo.rows() != M || topo.cols() != N) throw DimensionMismatch("topology must be M x N");
    if (model.x0.size() != P) throw DimensionMismatch("x0 must have length P");
    shape(model.Rx, P, P, "Rx");
    shape(model.H, N * L, P, "H");
    shape(model.G, S, M, "G");
    shape(model.Reps, S, S, "Reps");
    if (static_cast<Index>(model.Rv_blocks.size()) != N)
        throw DimensionMismatch("need one observation-noise block per sensor");
    if (static_cast<Index>(model.Ralpha_blocks.size()) != M)
        throw DimensionMismatch("need one collaboration-noise block per communicating sensor");

    require_positive_definite(model.Rx, "Rx");
    require_positive_definite(model.Reps, "Reps");
    for (Index i = 0; i < N; ++i) {
        const std::string name = "Rv_" + std::to_string(i);
        shape(model.Rv_blocks[static_cast<size_t>(i)], L, L, name);
        require_positive_definite(model.Rv_blocks[static_cast<size_t>(i)], name);
    }
    for (Index i = 0; i < M; ++i) {
        const std::string name = "Ralpha_" + std::to_string(i);
        shape(model.Ralpha_blocks[static_cast<size_t>(i)], L, L, name);
        require_positive_definite(model.Ralpha_blocks[static_cast<size_t>(i)], name);
    }
    model.Rv = block_diagonal(model.Rv_blocks);
    model.Ralpha = block_diagonal(model.Ralpha_blocks);
    return model;
}

// Expected collaboration energy of sensor i (0 <= i < N):
// tr(Ry_i) * || column i of (W masked off the self-links) ||^2.
inline double expected_collab_cost(Index i, const Matrix& W, const SignalModel& model,
                                   const Topology& topo) {
    if (i < 0 || i >= topo.cols()) throw DimensionMismatch("sensor index out of range");
    topo.require_conforming(W);
    double sq = 0.0;
    for (Index j = 0; j < W.rows(); ++j)
        if (j != i) sq += W(j, i) * W(j, i);
    return model.Ry_block(i).trace() * sq;
}

// Expected energy spent by communicating sensor i to send f_i^T z_i to the FC.
inline double expected_compress_cost(Index i, const Vector& fi, const Matrix& W,
                                     const SignalModel& model) {
    const Index L = model.L();
    if (i < 0 || i >= model.M()) throw DimensionMismatch("sensor index out of range");
    if (fi.size() != L) throw DimensionMismatch("compression vector must have length L");
    const Matrix Wi = kron(W.row(i), identity(L));
    const Vector a = Wi.transpose() * fi;
    return a.dot(model.Ry() * a) + fi.dot(model.Ralpha_blocks[static_cast<size_t>(i)] * fi);
}

inline double total_cost(Index i, const Matrix& W, const CompressionSet& F, const SignalModel& model,
                         const Topology& topo) {
    const double collab = expected_collab_cost(i, W, model, topo);
    if (i < topo.rows()) return collab + expected_compress_cost(i, F.f[static_cast<size_t>(i)], W, model);
    return collab;
}

// q(k) = D x + n_q with n_q ~ (0, Rn).
struct FcMeasurement {
    Matrix D;  // S x P
    Matrix Rn; // S x S
    Matrix A;  // S x NL, G F (W kron I_L): maps raw observations to the FC
    Matrix GF; // S x ML
};

inline FcMeasurement fc_measurement(const SignalModel& model, const Matrix& W, const Matrix& F) {
    const Index L = model.L();
    FcMeasurement out;
    out.GF = model.G * F;
    out.A = out.GF * kron(W, identity(L));
    out.D = out.A * model.H;
    out.Rn = out.A * model.Rv * out.A.transpose() + out.GF * model.Ralpha * out.GF.transpose()
             + model.Reps;
    out.Rn = symmetrized(out.Rn);
    return out;
}

// ---------------------------------------------------------------------------
// Random scenario realization
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for an independent stream; (seed, stream) pairs never collide in practice.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Matrix standard_normal(Rng& rng, Index rows, Index cols) {
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = n01(rng);
    return out;
}

// Any S with S S^T = cov; handles PSD (e.g. zero) covariances.
inline Matrix covariance_factor(const Matrix& cov) {
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(cov));
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

struct RealizationSpec {
    Dimensions dims;
    Index horizon = 1;
    SignalModel noise; // uses x0, Rx and the noise covariances; H and G are drawn
    std::optional<StateModel> dynamics;
};

// One Monte Carlo draw. Index k = 0..horizon-1 holds time step k+1.
struct Realization {
    std::uint64_t seed = 0;
    Vector x_initial;
    std::vector<Vector> x; // true parameter at each step
    std::vector<Matrix> H, G;
    std::vector<Vector> v, alpha, eps;
};

inline Realization draw_realization(const RealizationSpec& spec, std::uint64_t seed) {
    const auto& d = spec.dims;
    d.validate();
    Rng rng(derive_seed(seed, 0));
    Rng state_rng(derive_seed(seed, 1));
    Realization out;
    out.seed = seed;

    const Matrix rx_factor = covariance_factor(spec.noise.Rx);
    out.x_initial = spec.noise.x0 + rx_factor * standard_normal(rng, d.P, 1);

    std::vector<Matrix> rv_factor, ra_factor;
    for (const auto& b : spec.noise.Rv_blocks) rv_factor.push_back(covariance_factor(b));
    for (const auto& b : spec.noise.Ralpha_blocks) ra_factor.push_back(covariance_factor(b));
    const Matrix re_factor = covariance_factor(spec.noise.Reps);
    Matrix ns_factor;
    if (spec.dynamics) ns_factor = covariance_factor(spec.dynamics->noise_cov);

    Vector x = out.x_initial;
    for (Index k = 0; k < spec.horizon; ++k) {
        if (spec.dynamics)
            x = spec.dynamics->transition * x + ns_factor * standard_normal(state_rng, d.P, 1);
        out.x.push_back(x);
        out.H.push_back(standard_normal(rng, d.N * d.L, d.P));
        out.G.push_back(standard_normal(rng, d.S, d.M));
        Vector v(d.N * d.L);
        for (Index i = 0; i < d.N; ++i)
            v.segment(i * d.L, d.L) = rv_factor[static_cast<size_t>(i)] * standard_normal(rng, d.L, 1);
        Vector a(d.M * d.L);
        for (Index i = 0; i < d.M; ++i)
            a.segment(i * d.L, d.L) = ra_factor[static_cast<size_t>(i)] * standard_normal(rng, d.L, 1);
        out.v.push_back(std::move(v));
        out.alpha.push_back(std::move(a));
        out.eps.push_back(re_factor * standard_normal(rng, d.S, 1));
    }
    return out;
}

// Isotropic model used by the simulator: Rx = prior_variance * I, x0 = 0 and
// noise covariances (1/SNR) * I.
inline SignalModel isotropic_model(const Dimensions& d, double snr_obs_db, double snr_collab_db,
                                   double snr_fc_db, double prior_variance = 1.0) {
    SignalModel m;
    m.x0 = Vector::Zero(d.P);
    m.Rx = prior_variance * identity(d.P);
    m.H = Matrix::Zero(d.N * d.L, d.P);
    m.G = Matrix::Zero(d.S, d.M);
    m.Rv_blocks.assign(static_cast<size_t>(d.N), noise_variance_from_snr_db(snr_obs_db) * identity(d.L));
    m.Ralpha_blocks.assign(static_cast<size_t>(d.M),
                           noise_variance_from_snr_db(snr_collab_db) * identity(d.L));
    m.Reps = noise_variance_from_snr_db(snr_fc_db) * identity(d.S);
    m.Rv = block_diagonal(m.Rv_blocks);
    m.Ralpha = block_diagonal(m.Ralpha_blocks);
    return m;
}

} // namespace colcomp
