#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <colcomp/colcomp.hpp>

namespace {

using namespace colcomp;

struct CommonFlags {
    std::string config_path;
    std::string out_dir = ".";
    std::string stem = "run";
    std::string mode;
    std::vector<std::string> overrides;
    long long seed = -1;
    int trials = 0;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config_path, "Scenario file (key = value lines)")->check(CLI::ExistingFile);
    app->add_option("--seed", f.seed, "Master seed")->check(CLI::NonNegativeNumber);
    app->add_option("--trials", f.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    app->add_option("--mode", f.mode, "Modes to run: centralized, decentralized, benchmark or all (comma separated)");
    app->add_option("--set", f.overrides, "Override a config key, e.g. --set snr.fc_db=10");
}

ScenarioConfig build_config(const CommonFlags& f) {
    ScenarioConfig c = f.config_path.empty() ? ScenarioConfig{} : load_config(f.config_path);
    for (const auto& kv : f.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
    if (f.trials > 0) c.trials = f.trials;
    if (!f.mode.empty()) apply_config(c, "run.modes", f.mode);
    c.validate();
    return c;
}

void print_summary(const RunResult& r) {
    for (size_t m = 0; m < 3; ++m) {
        const ModeSummary& s = r.modes[m];
        if (!s.ran) continue;
        std::printf("%-14s final mse %.6g (se %.2g)  sample %.6g  failures %d  bound violations %d  "
                    "gain fallbacks %d\n",
                    mode_names[m], s.mse_mean.back(), s.mse_se.back(), s.sample_mean.back(), s.failures,
                    s.lemma_violations, s.gain_fallbacks);
    }
    std::printf("wall %.2f s\n", r.wall_seconds);
}

int cmd_run(const CommonFlags& f) {
    ScenarioConfig c = build_config(f);
    c.sweep = {};
    const RunResult r = run_scenario(c);
    emit_results(r, f.out_dir, f.stem);
    print_summary(r);
    std::printf("wrote %s/%s.csv\n", f.out_dir.c_str(), f.stem.c_str());
    return 0;
}

int cmd_sweep(const CommonFlags& f) {
    const ScenarioConfig c = build_config(f);
    const std::vector<RunResult> rs = run_sweep(c);
    std::printf("%-20s", c.sweep.parameter.c_str());
    for (size_t m = 0; m < 3; ++m)
        if (rs.front().modes[m].ran) std::printf(" %16s", mode_names[m]);
    std::printf("\n");
    for (size_t i = 0; i < rs.size(); ++i) {
        const std::string stem = f.stem + "_" + std::to_string(i);
        emit_results(rs[i], f.out_dir, stem);
        std::printf("%-20s", c.sweep.values[i].c_str());
        for (size_t m = 0; m < 3; ++m)
            if (rs[i].modes[m].ran) std::printf(" %16.6g", rs[i].modes[m].mse_mean.back());
        std::printf("\n");
    }
    std::printf("wrote %zu tables to %s\n", rs.size(), f.out_dir.c_str());
    return 0;
}

int cmd_topology(const CommonFlags& f, int trial) {
    const ScenarioConfig c = build_config(f);
    if (c.topology.kind == TopologyKind::Geometric) {
        const std::uint64_t seed = derive_seed(c.topology.seed, static_cast<std::uint64_t>(trial));
        const GeometricLayout g = geometric_layout(c.dims.N, c.dims.M, c.topology.radius, seed);
        std::printf("# sensor x y (sensors 0..%lld communicate)\n", static_cast<long long>(c.dims.M - 1));
        for (Index i = 0; i < g.positions.rows(); ++i)
            std::printf("%lld %.6f %.6f\n", static_cast<long long>(i), g.positions(i, 0), g.positions(i, 1));
    }
    const Topology t = scenario_topology(c, trial);
    std::printf("# adjacency %lld x %lld\n", static_cast<long long>(t.rows()), static_cast<long long>(t.cols()));
    for (Index i = 0; i < t.rows(); ++i) {
        for (Index j = 0; j < t.cols(); ++j) std::printf("%s%d", j ? " " : "", t.adjacency()(i, j));
        std::printf("\n");
    }
    return 0;
}

// Small simulation: centralized tr P(k) strictly decreasing and every accepted
// design within budget.
checks::CheckResult small_run_check() {
    ScenarioConfig c;
    c.horizon = 5;
    c.trials = 2;
    c.rho_centralized = 3;
    c.rho_decentralized = 3;
    c.threads = 1;
    const RunResult r = run_scenario(c);
    const ModeSummary& cen = r.mode(Mode::Centralized);
    double excess = -1e300;
    for (const auto& s : r.modes) excess = std::max(excess, s.max_energy_excess);
    const bool ok = cen.nonincreasing_violations == 0 && cen.lemma_violations == 0 && excess <= 1e-8;
    char buf[160];
    std::snprintf(buf, sizeof buf, "nonincreasing %d, bound violations %d, max energy excess %.3g",
                  cen.nonincreasing_violations, cen.lemma_violations, excess);
    return {"small simulation", ok, buf};
}

int cmd_check() {
    std::vector<checks::CheckResult> results;
    results.push_back(checks::lift_identities(200, 1));
    results.push_back(checks::worked_example());
    results.push_back(checks::assembly_consistency(50, 2));
    results.push_back(checks::convex_qcqp_oracle(10, 3));
    results.push_back(checks::single_equality_qcqp(20, 4));
    results.push_back(small_run_check());
    int failed = 0;
    for (const auto& r : results) {
        std::printf("%s %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        failed += r.passed ? 0 : 1;
    }
    if (failed) std::fprintf(stderr, "check: %d invariant(s) failed\n", failed);
    return failed ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collaboration and compression design for sequential LMMSE estimation"};
    app.require_subcommand(1);

    CommonFlags run_f, sweep_f, topo_f;
    int topo_trial = 0;
    CLI::App* run = app.add_subcommand("run", "Monte Carlo run of every selected mode; writes a result table");
    add_common(run, run_f);
    run->add_option("--out", run_f.out_dir, "Existing output directory");
    run->add_option("--stem", run_f.stem, "File name stem for the table and config echo");

    CLI::App* sweep = app.add_subcommand("sweep", "One run per sweep.values entry with common random numbers");
    add_common(sweep, sweep_f);
    sweep->add_option("--out", sweep_f.out_dir, "Existing output directory");
    sweep->add_option("--stem", sweep_f.stem, "File name stem; tables are <stem>_<index>.csv");

    CLI::App* topo = app.add_subcommand("topology", "Print the collaboration graph used by one trial");
    add_common(topo, topo_f);
    topo->add_option("--trial", topo_trial, "Trial index")->check(CLI::NonNegativeNumber);

    CLI::App* check = app.add_subcommand("check", "Run the identity and invariant suite");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(run_f);
        if (*sweep) return cmd_sweep(sweep_f);
        if (*topo) return cmd_topology(topo_f, topo_trial);
        if (*check) return cmd_check();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
