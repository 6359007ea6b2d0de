#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <thread>
#include <vector>

#include <colcomp/collab.hpp>
#include <colcomp/compress.hpp>
#include <colcomp/config.hpp>
#include <colcomp/estimator.hpp>

namespace colcomp {

// ---------------------------------------------------------------------------
// Topologies
// ---------------------------------------------------------------------------

struct GeometricLayout {
    Matrix positions; // N x 2, rows in sensor order (communicating sensors first)
    Topology topology;
};

// Uniform sensors in the unit square. The M sensors closest to the center
// (ties by index) communicate and become sensors 0..M-1, kept in index order.
inline GeometricLayout geometric_layout(Index N, Index M, double r0, std::uint64_t seed) {
    if (M < 1 || N < M) throw TopologyError("geometric topology needs 1 <= M <= N");
    if (!(r0 >= 0.0)) throw TopologyError("collaboration radius must be >= 0");
    Rng rng(derive_seed(seed, 2));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix raw(N, 2);
    for (Index i = 0; i < N; ++i) {
        raw(i, 0) = unit(rng);
        raw(i, 1) = unit(rng);
    }
    std::vector<Index> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    auto center_dist = [&](Index i) { return std::hypot(raw(i, 0) - 0.5, raw(i, 1) - 0.5); };
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return center_dist(a) < center_dist(b); });
    std::sort(order.begin(), order.begin() + M);
    std::sort(order.begin() + M, order.end());

    GeometricLayout out;
    out.positions.resize(N, 2);
    for (Index i = 0; i < N; ++i) out.positions.row(i) = raw.row(order[static_cast<size_t>(i)]);
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(M, N);
    for (Index i = 0; i < M; ++i)
        for (Index j = 0; j < N; ++j)
            a(i, j) = (i == j || (out.positions.row(i) - out.positions.row(j)).norm() <= r0) ? 1 : 0;
    out.topology = Topology(std::move(a));
    return out;
}

inline Topology geometric_topology(Index N, Index M, double r0, std::uint64_t seed) {
    return geometric_layout(N, M, r0, seed).topology;
}

// Topology used by trial `trial`; geometric graphs are redrawn per trial from the
// topology seed so every sweep value sees the same positions.
inline Topology scenario_topology(const ScenarioConfig& c, int trial) {
    switch (c.topology.kind) {
    case TopologyKind::Full: return Topology::full(c.dims.M, c.dims.N);
    case TopologyKind::Explicit: return Topology(c.topology.matrix);
    case TopologyKind::Geometric:
        return geometric_topology(c.dims.N, c.dims.M, c.topology.radius,
                                  derive_seed(c.topology.seed, static_cast<std::uint64_t>(trial)));
    }
    throw ConfigError("unknown topology kind");
}

// ---------------------------------------------------------------------------
// Design loop
// ---------------------------------------------------------------------------

enum class Mode { Centralized = 0, Decentralized = 1, Benchmark = 2 };
inline constexpr std::array<const char*, 3> mode_names{"centralized", "decentralized", "benchmark"};

struct Design {
    Matrix W;
    CompressionSet F;
    Matrix T;
};

struct RunOptions {
    BarrierOptions barrier;
    bool closed_form_gain = false; // decentralized mode: skip the constrained gain
    // Rounds stop early once a full round changes tr P(k) by less than this relative amount.
    double round_tol = 1e-12;
};

// Starting point: W = A row-normalized and scaled so that the worst sensor spends
// half its budget on collaboration; f_i = c 1 spending the other half.
inline Design initial_design(const SignalModel& model, const Topology& topo, const EnergyBudget& budget) {
    const Index M = topo.rows(), N = topo.cols(), L = model.L();
    Design d;
    d.W = topo.adjacency().cast<double>();
    for (Index i = 0; i < M; ++i) d.W.row(i) /= d.W.row(i).sum();
    double worst = 0.0;
    for (Index i = 0; i < N; ++i)
        worst = std::max(worst, expected_collab_cost(i, d.W, model, topo) / budget.mu(i));
    if (worst > 0.0) d.W *= std::sqrt(0.5 / worst);
    d.F = CompressionSet::zeros(M, L);
    const Vector ones = Vector::Ones(L);
    for (Index i = 0; i < M; ++i) {
        const double unit = expected_compress_cost(i, ones, d.W, model);
        d.F.f[static_cast<size_t>(i)] = std::sqrt(0.5 * budget.mu(i) / unit) * ones;
    }
    return d;
}

inline bool design_feasible(const Design& d, const SignalModel& model, const Topology& topo,
                            const EnergyBudget& budget) {
    for (Index i = 0; i < topo.cols(); ++i)
        if (total_cost(i, d.W, d.F, model, topo) > budget.mu(i) + 1e-8) return false;
    return true;
}

struct StepDesign {
    Design design;
    int rounds = 0;
    bool gain_fallback = false;
};

// W-step: kept only when it lowers tr P(k) or the incoming design is infeasible.
inline void collab_step(Design& d, double& current, bool& feasible, const Matrix& P_prev,
                        const SignalModel& model, const Topology& topo, const EnergyBudget& budget,
                        const RunOptions& opt) {
    const CollabProblem prob = assemble_collab_problem(P_prev, model, topo, d.F, d.T, budget);
    const CollabSolution sol = solve_collaboration(prob, std::nullopt, opt.barrier);
    const double mse = design_mse(P_prev, model, sol.W, d.F, d.T);
    if (!feasible || mse <= current) {
        d.W = sol.W;
        current = mse;
        feasible = true;
    }
}

inline StepDesign design_centralized(Design d, const Matrix& P_prev, const SignalModel& model,
                                     const Topology& topo, const EnergyBudget& budget, int rho,
                                     const RunOptions& opt) {
    StepDesign out;
    d.T = filter_gain_closed_form(P_prev, model, d.W, d.F).T;
    double current = design_mse(P_prev, model, d.W, d.F, d.T);
    bool feasible = design_feasible(d, model, topo, budget);
    for (int r = 0; r < rho; ++r) {
        const double start = current;
        collab_step(d, current, feasible, P_prev, model, topo, budget, opt);
        const SweepReport sw = sweep_centralized(P_prev, model, topo, d.W, d.T, d.F, budget, 1, opt.barrier);
        d.F = sw.F;
        d.T = filter_gain_closed_form(P_prev, model, d.W, d.F).T;
        current = design_mse(P_prev, model, d.W, d.F, d.T);
        out.rounds = r + 1;
        if (r > 0 && start - current <= opt.round_tol * std::abs(start)) break;
    }
    out.design = std::move(d);
    return out;
}

inline StepDesign design_decentralized(Design d, const Matrix& P_prev, const SignalModel& model,
                                       const Topology& topo, const EnergyBudget& budget, int rho,
                                       const RunOptions& opt) {
    StepDesign out;
    auto gain = [&](const Design& x) {
        return opt.closed_form_gain ? filter_gain_closed_form(P_prev, model, x.W, x.F)
                                    : filter_gain_decentralized(P_prev, model, x.W, x.F);
    };
    FilterGain g = gain(d);
    d.T = g.T;
    out.gain_fallback = g.fell_back;
    double current = design_mse(P_prev, model, d.W, d.F, d.T);
    bool feasible = design_feasible(d, model, topo, budget);
    for (int r = 0; r < rho; ++r) {
        const Matrix W_before = d.W;
        const CompressionSet F_before = d.F;
        collab_step(d, current, feasible, P_prev, model, topo, budget, opt);
        d.F = local_compression(P_prev, model, topo, d.W, d.T, budget, opt.barrier);
        g = gain(d);
        d.T = g.T;
        out.gain_fallback = out.gain_fallback || g.fell_back;
        current = design_mse(P_prev, model, d.W, d.F, d.T);
        out.rounds = r + 1;
        double change = (d.W - W_before).norm();
        for (Index i = 0; i < d.F.M(); ++i)
            change += (d.F.f[static_cast<size_t>(i)] - F_before.f[static_cast<size_t>(i)]).norm();
        if (r > 0 && change <= opt.round_tol) break;
    }
    out.design = std::move(d);
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo runs
// ---------------------------------------------------------------------------

struct ModeSeries {
    std::vector<double> mse;            // tr P(k)
    std::vector<double> sq_error;       // |x_hat(k) - x(k)|^2
    std::vector<double> lemma_bound;    // centralized only
    std::vector<double> lemma_decrease; // centralized only
    std::vector<Vector> energy;         // per-sensor expected energy of the applied design
    std::vector<char> failed;           // design step infeasible; previous design reused
    std::vector<char> gain_fallback;    // decentralized gain fell back to closed form
    std::vector<int> rounds;
    int lemma_violations = 0;
};

struct TrialResult {
    std::uint64_t seed = 0;
    std::array<ModeSeries, 3> modes;
};

struct ModeSummary {
    bool ran = false;
    std::vector<double> mse_mean, mse_se, sample_mean, sample_se;
    std::vector<double> lemma_bound_mean, lemma_decrease_mean;
    std::vector<Vector> energy_mean;
    int failures = 0;
    int lemma_violations = 0;
    int nonincreasing_violations = 0; // steps where tr P(k) >= tr P(k-1)
    int gain_fallbacks = 0;
    double max_energy_excess = -std::numeric_limits<double>::infinity(); // over accepted steps
};

struct RunResult {
    ScenarioConfig config;
    Vector mu;
    std::vector<TrialResult> trials;
    std::array<ModeSummary, 3> modes;
    double wall_seconds = 0.0;

    const ModeSummary& mode(Mode m) const { return modes[static_cast<size_t>(m)]; }
    Index horizon() const { return config.horizon; }
    double final_mse(Mode m) const { return mode(m).mse_mean.back(); }
};

inline RealizationSpec realization_spec(const ScenarioConfig& c) {
    RealizationSpec spec;
    spec.dims = c.dims;
    spec.horizon = c.horizon;
    spec.noise = isotropic_model(c.dims, c.snr_obs_db, c.snr_collab_db, c.snr_fc_db, c.prior_variance);
    spec.dynamics = c.state_model();
    return spec;
}

inline TrialResult run_trial(const ScenarioConfig& c, int trial, RunOptions opt = {}) {
    opt.closed_form_gain = opt.closed_form_gain || c.decentralized_closed_form_gain;
    TrialResult out;
    out.seed = derive_seed(c.seed, static_cast<std::uint64_t>(trial));
    const RealizationSpec spec = realization_spec(c);
    const Realization real = draw_realization(spec, out.seed);
    const Topology topo = scenario_topology(c, trial);
    const EnergyBudget budget = c.budget();
    const std::optional<StateModel> dyn = c.state_model();

    const bool run[3] = {c.modes.centralized, c.modes.decentralized, c.modes.benchmark};
    std::array<EstimatorState, 3> state;
    state.fill(EstimatorState::prior(spec.noise.x0, spec.noise.Rx));
    std::array<Design, 2> design;
    std::array<bool, 2> have_design{false, false};

    for (Index k = 0; k < c.horizon; ++k) {
        SignalModel model = spec.noise;
        model.H = real.H[static_cast<size_t>(k)];
        model.G = real.G[static_cast<size_t>(k)];
        const Vector& x = real.x[static_cast<size_t>(k)];
        const Vector y = model.H * x + real.v[static_cast<size_t>(k)];

        for (int m = 0; m < 3; ++m) {
            if (!run[m]) continue;
            ModeSeries& s = out.modes[static_cast<size_t>(m)];
            const EstimatorState prior = dyn ? kalman_predict(state[static_cast<size_t>(m)], *dyn)
                                             : state[static_cast<size_t>(m)];
            if (m == static_cast<int>(Mode::Benchmark)) {
                state[static_cast<size_t>(m)] = benchmark_step(prior, y, model.H, model.Rv);
            } else {
                const auto mi = static_cast<size_t>(m);
                if (!have_design[mi]) {
                    design[mi] = initial_design(model, topo, budget);
                    have_design[mi] = true;
                }
                StepDesign sd;
                bool failed = false;
                try {
                    sd = m == 0 ? design_centralized(design[mi], prior.P, model, topo, budget, c.rho_centralized, opt)
                                : design_decentralized(design[mi], prior.P, model, topo, budget,
                                                       c.rho_decentralized, opt);
                } catch (const Error&) {
                    failed = true;
                    sd.design = design[mi];
                    sd.design.T = filter_gain_closed_form(prior.P, model, sd.design.W, sd.design.F).T;
                }
                const Design& d = sd.design;
                const FcMeasurement fc = fc_measurement(model, d.W, d.F.matrix());
                const Vector q = fc.A * y + fc.GF * real.alpha[static_cast<size_t>(k)]
                                 + real.eps[static_cast<size_t>(k)];
                state[mi] = rlmmse_step(prior, q, fc.D, fc.Rn, d.T);
                state[mi].k = k + 1;

                Vector energy(topo.cols());
                for (Index i = 0; i < topo.cols(); ++i) energy(i) = total_cost(i, d.W, d.F, model, topo);
                s.energy.push_back(std::move(energy));
                s.failed.push_back(failed ? 1 : 0);
                s.gain_fallback.push_back(sd.gain_fallback ? 1 : 0);
                s.rounds.push_back(sd.rounds);
                if (m == 0) {
                    const MonotonicityDiagnostic md =
                        monotonicity_check(prior.P.trace(), state[mi].P.trace(), fc.D, prior.P, fc.Rn);
                    s.lemma_bound.push_back(md.bound);
                    s.lemma_decrease.push_back(md.decrease);
                    if (md.violated) ++s.lemma_violations;
                }
                if (!failed) design[mi] = d;
            }
            s.mse.push_back(mse_trace(state[static_cast<size_t>(m)]));
            s.sq_error.push_back((state[static_cast<size_t>(m)].x_hat - x).squaredNorm());
        }
    }
    return out;
}

namespace detail {

inline void mean_and_se(const std::vector<double>& v, double& mean, double& se) {
    const double n = static_cast<double>(v.size());
    mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    se = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
}

inline ModeSummary summarize(const std::vector<TrialResult>& trials, size_t m, Index K, const Vector& mu) {
    ModeSummary s;
    s.ran = !trials.front().modes[m].mse.empty();
    if (!s.ran) return s;
    std::vector<double> col(trials.size());
    auto stat = [&](auto get, std::vector<double>& mean, std::vector<double>* se) {
        for (Index k = 0; k < K; ++k) {
            for (size_t t = 0; t < trials.size(); ++t) col[t] = get(trials[t].modes[m], static_cast<size_t>(k));
            double a = 0.0, b = 0.0;
            mean_and_se(col, a, b);
            mean.push_back(a);
            if (se) se->push_back(b);
        }
    };
    stat([](const ModeSeries& x, size_t k) { return x.mse[k]; }, s.mse_mean, &s.mse_se);
    stat([](const ModeSeries& x, size_t k) { return x.sq_error[k]; }, s.sample_mean, &s.sample_se);
    const ModeSeries& first = trials.front().modes[m];
    if (!first.lemma_bound.empty()) {
        stat([](const ModeSeries& x, size_t k) { return x.lemma_bound[k]; }, s.lemma_bound_mean, nullptr);
        stat([](const ModeSeries& x, size_t k) { return x.lemma_decrease[k]; }, s.lemma_decrease_mean, nullptr);
    }
    if (!first.energy.empty()) {
        for (Index k = 0; k < K; ++k) {
            Vector e = Vector::Zero(mu.size());
            for (const auto& t : trials) e += t.modes[m].energy[static_cast<size_t>(k)];
            s.energy_mean.push_back(e / static_cast<double>(trials.size()));
        }
    }
    for (const auto& t : trials) {
        const ModeSeries& x = t.modes[m];
        s.lemma_violations += x.lemma_violations;
        for (size_t k = 0; k < x.mse.size(); ++k) {
            const double prev = k == 0 ? std::numeric_limits<double>::infinity() : x.mse[k - 1];
            if (!(x.mse[k] < prev)) ++s.nonincreasing_violations;
        }
        for (size_t k = 0; k < x.failed.size(); ++k) {
            if (x.failed[k]) {
                ++s.failures;
                continue;
            }
            s.max_energy_excess = std::max(s.max_energy_excess, (x.energy[k] - mu).maxCoeff());
        }
        for (char f : x.gain_fallback) s.gain_fallbacks += f;
    }
    return s;
}

} // namespace detail

inline RunResult run_scenario(const ScenarioConfig& config, const RunOptions& opt = {}) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult out;
    out.config = config;
    out.mu = config.budget().mu;
    out.trials.resize(static_cast<size_t>(config.trials));

    int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, config.trials);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (int t = next++; t < config.trials && !failed; t = next++) {
            try {
                out.trials[static_cast<size_t>(t)] = run_trial(config, t, opt);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    for (size_t m = 0; m < 3; ++m) out.modes[m] = detail::summarize(out.trials, m, config.horizon, out.mu);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// One run per sweep value, all sharing the master seed.
inline std::vector<RunResult> run_sweep(const ScenarioConfig& config, const RunOptions& opt = {}) {
    if (!config.sweep.active() || config.sweep.values.empty())
        throw ConfigError("sweep.parameter and sweep.values must be set");
    std::vector<RunResult> out;
    for (const auto& v : config.sweep.values) {
        ScenarioConfig c = config;
        c.sweep = {};
        apply_config(c, config.sweep.parameter, v);
        out.push_back(run_scenario(c, opt));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline std::vector<std::string> result_columns(Index N) {
    std::vector<std::string> cols{"k", "mse_centralized", "mse_decentralized", "mse_benchmark",
                                  "sample_mse_centralized", "sample_mse_decentralized", "sample_mse_benchmark"};
    for (Index i = 0; i < N; ++i) cols.push_back("energy_sensor_" + std::to_string(i + 1));
    cols.push_back("lemma1_bound");
    cols.push_back("lemma1_decrease");
    return cols;
}

// Writes <dir>/<stem>.csv and <dir>/<stem>.config.txt. Energy columns report the
// centralized design, or the decentralized one when centralized was not run.
inline void emit_results(const RunResult& r, const std::string& dir, const std::string& stem) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw Error("output directory '" + dir + "' does not exist");
    const fs::path csv = fs::path(dir) / (stem + ".csv");
    const fs::path echo = fs::path(dir) / (stem + ".config.txt");
    const Index N = r.config.dims.N, K = r.horizon();

    std::FILE* f = std::fopen(csv.string().c_str(), "w");
    if (!f) throw Error("cannot write '" + csv.string() + "'");
    const auto cols = result_columns(N);
    for (size_t i = 0; i < cols.size(); ++i) std::fprintf(f, "%s%s", i ? "," : "", cols[i].c_str());
    std::fprintf(f, "\n");

    auto num = [&](double v) {
        if (std::isnan(v)) std::fprintf(f, ",nan");
        else std::fprintf(f, ",%.17g", v);
    };
    const ModeSummary& cen = r.mode(Mode::Centralized);
    const ModeSummary& energy_src = cen.ran ? cen : r.mode(Mode::Decentralized);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Index k = 0; k < K; ++k) {
        const auto ks = static_cast<size_t>(k);
        std::fprintf(f, "%lld", static_cast<long long>(k + 1));
        for (size_t m = 0; m < 3; ++m) num(r.modes[m].ran ? r.modes[m].mse_mean[ks] : nan);
        for (size_t m = 0; m < 3; ++m) num(r.modes[m].ran ? r.modes[m].sample_mean[ks] : nan);
        for (Index i = 0; i < N; ++i) num(energy_src.energy_mean.empty() ? nan : energy_src.energy_mean[ks](i));
        num(cen.lemma_bound_mean.empty() ? nan : cen.lemma_bound_mean[ks]);
        num(cen.lemma_decrease_mean.empty() ? nan : cen.lemma_decrease_mean[ks]);
        std::fprintf(f, "\n");
    }
    const bool write_ok = std::ferror(f) == 0;
    if (std::fclose(f) != 0 || !write_ok) throw Error("write failed for '" + csv.string() + "'");

    std::FILE* e = std::fopen(echo.string().c_str(), "w");
    if (!e) throw Error("cannot write '" + echo.string() + "'");
    std::fprintf(e, "%s", echo_config(r.config).c_str());
    std::fprintf(e, "# wall_seconds = %.3f\n", r.wall_seconds);
    for (size_t m = 0; m < 3; ++m)
        if (r.modes[m].ran)
            std::fprintf(e, "# %s: failures = %d, lemma1_violations = %d, gain_fallbacks = %d\n", mode_names[m],
                         r.modes[m].failures, r.modes[m].lemma_violations, r.modes[m].gain_fallbacks);
    if (std::fclose(e) != 0) throw Error("write failed for '" + echo.string() + "'");
}

} // namespace colcomp
