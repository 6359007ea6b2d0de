// Acceptance suite. One PASS/FAIL line per criterion; exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <colcomp/colcomp.hpp>

namespace {

using namespace colcomp;
using Clock = std::chrono::steady_clock;

struct Outcome {
    int id;
    std::string name;
    bool passed;
    std::string detail;
};

std::vector<Outcome> outcomes;
double worst_energy_excess = -std::numeric_limits<double>::infinity();
int accepted_steps = 0;
int failed_steps = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    outcomes.push_back({id, name, passed, detail});
    std::printf("%s [%d] %s: %s\n", passed ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Energy ledger over every accepted design step of every design mode.
void account_energy(const RunResult& r) {
    for (size_t m = 0; m < 2; ++m) {
        for (const auto& t : r.trials) {
            const ModeSeries& s = t.modes[m];
            for (size_t k = 0; k < s.failed.size(); ++k) {
                if (s.failed[k]) {
                    ++failed_steps;
                    continue;
                }
                ++accepted_steps;
                worst_energy_excess = std::max(worst_energy_excess, (s.energy[k] - r.mu).maxCoeff());
            }
        }
    }
}

RunResult run_and_account(const ScenarioConfig& c) {
    RunResult r = run_scenario(c);
    account_energy(r);
    return r;
}

// Mean and standard error of per-trial differences a - b at step k.
void paired_stats(const std::vector<TrialResult>& ta, size_t ma, const std::vector<TrialResult>& tb, size_t mb,
                  size_t k, double& mean, double& se) {
    std::vector<double> diff;
    for (size_t t = 0; t < ta.size(); ++t) diff.push_back(ta[t].modes[ma].mse[k] - tb[t].modes[mb].mse[k]);
    detail::mean_and_se(diff, mean, se);
}

ScenarioConfig reference_config() {
    ScenarioConfig c; // P=3, L=6, N=7, M=3, S=3, 20 dB, full topology, K=100, rho 20 / 100
    c.trials = 20;
    c.seed = 2024;
    return c;
}

void lift_and_solver_criteria() {
    auto t0 = Clock::now();
    const checks::CheckResult c1 = checks::lift_identities(500, 101);
    const double t1 = seconds_since(t0);
    report(1, "lift identities", c1.passed && t1 < 10.0, c1.detail + fmt(", %.2f s", t1));

    const checks::CheckResult c2 = checks::worked_example();
    report(2, "worked example ordering and selector", c2.passed, c2.detail);

    const checks::CheckResult c3 = checks::assembly_consistency(100, 103);
    report(3, "assembly consistency", c3.passed, c3.detail);

    const checks::CheckResult c4 = checks::convex_qcqp_oracle(50, 104);
    report(4, "convex QCQP vs grid oracle", c4.passed, c4.detail);

    const checks::CheckResult c5 = checks::single_equality_qcqp(50, 105);
    report(5, "single equality QCQP", c5.passed, c5.detail);
}

void hierarchy_criteria() {
    ScenarioConfig cen = reference_config();
    cen.modes = {true, false, true};
    auto t0 = Clock::now();
    const RunResult rc = run_and_account(cen);
    const double t_cen = seconds_since(t0);

    int nonstrict = 0, lemma = 0, failures = rc.mode(Mode::Centralized).failures;
    for (const auto& t : rc.trials) {
        const ModeSeries& s = t.modes[0];
        double prev = cen.prior_variance * static_cast<double>(cen.dims.P);
        for (double v : s.mse) {
            if (!(v < prev)) ++nonstrict;
            prev = v;
        }
        lemma += s.lemma_violations;
    }
    report(6, "strict decrease and monotonicity bound (centralized)",
           nonstrict == 0 && lemma == 0 && failures == 0 && t_cen < 600.0,
           fmt("%d trials x %lld steps: %d non-strict steps, %d bound violations, %d failed steps, %.1f s",
               cen.trials, static_cast<long long>(cen.horizon), nonstrict, lemma, failures, t_cen));

    ScenarioConfig dec = reference_config();
    dec.modes = {false, true, false};
    t0 = Clock::now();
    const RunResult rd = run_and_account(dec);
    const double t_dec = seconds_since(t0);

    int order_bc = 0, order_cd = 0;
    for (size_t k = 0; k < static_cast<size_t>(cen.horizon); ++k) {
        double mean = 0.0, se = 0.0;
        paired_stats(rc.trials, 2, rc.trials, 0, k, mean, se); // benchmark - centralized
        if (mean > 2.0 * se) ++order_bc;
        paired_stats(rc.trials, 0, rd.trials, 1, k, mean, se); // centralized - decentralized
        if (mean > 2.0 * se) ++order_cd;
    }
    const double fc = rc.final_mse(Mode::Centralized), fd = rd.final_mse(Mode::Decentralized);
    const double ratio = fd / fc;
    report(7, "estimator hierarchy", order_bc == 0 && order_cd == 0 && ratio <= 1.25,
           fmt("ordering breaks: benchmark>centralized %d, centralized>decentralized %d; final mse benchmark %.4g, "
               "centralized %.4g, decentralized %.4g (ratio %.3f, limit 1.25); decentralized %.1f s, "
               "%d gain fallbacks",
               order_bc, order_cd, rc.final_mse(Mode::Benchmark), fc, fd, ratio, t_dec,
               rd.mode(Mode::Decentralized).gain_fallbacks));
}

struct SweepOutcome {
    bool passed;
    std::string detail;
};

// Final-k values must be monotone in the stated direction, with at most
// allowed_inversions adjacent pairs out of order.
SweepOutcome sweep_trend(const std::string& label, ScenarioConfig c, const std::string& key,
                         const std::vector<std::string>& values, bool normalize_by_p, bool increasing,
                         int allowed_inversions) {
    c.sweep = {key, values};
    const auto t0 = Clock::now();
    const std::vector<RunResult> rs = run_sweep(c);
    const double secs = seconds_since(t0);
    std::vector<double> v;
    std::string listing;
    for (size_t i = 0; i < rs.size(); ++i) {
        account_energy(rs[i]);
        double m = rs[i].final_mse(Mode::Centralized);
        if (normalize_by_p) m /= static_cast<double>(rs[i].config.dims.P);
        v.push_back(m);
        listing += fmt("%s%s=%.4g", i ? " " : "", values[i].c_str(), m);
    }
    int inversions = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (increasing ? v[i] < v[i - 1] : v[i] > v[i - 1]) ++inversions;
    const bool ok = inversions <= allowed_inversions && secs < 900.0;
    return {ok, fmt("%s [%s] inversions %d (allowed %d), %.0f s", label.c_str(), listing.c_str(), inversions,
                    allowed_inversions, secs)};
}

void trend_criterion() {
    ScenarioConfig base = reference_config();
    base.modes = {true, false, false};

    ScenarioConfig snr = base; // k = 100
    ScenarioConfig small = base;
    small.horizon = 30;
    small.rho_centralized = 10;

    std::vector<SweepOutcome> parts;
    parts.push_back(sweep_trend("obs snr", snr, "snr.observation_db", {"10", "15", "20", "25"}, false, false, 1));
    parts.push_back(sweep_trend("fc snr", snr, "snr.fc_db", {"10", "15", "20", "25"}, false, false, 1));
    parts.push_back(sweep_trend("M", small, "dims.M", {"1", "2", "3"}, false, false, 0));
    parts.push_back(sweep_trend("N", small, "dims.N", {"3", "5", "7", "9"}, false, false, 0));
    parts.push_back(sweep_trend("p (normalized)", small, "dims.P", {"1", "2", "3", "4", "5"}, true, true, 0));
    ScenarioConfig geo = small;
    geo.topology.kind = TopologyKind::Geometric;
    parts.push_back(sweep_trend("r0", geo, "topology.radius", {"0.2", "0.4", "0.6", "0.8", "sqrt2"}, false, false, 0));

    bool ok = true;
    std::string detail;
    for (const auto& p : parts) {
        ok = ok && p.passed;
        detail += (detail.empty() ? "" : "; ") + p.detail;
        std::printf("  %s %s\n", p.passed ? "ok  " : "FAIL", p.detail.c_str());
    }
    report(8, "qualitative trends", ok, fmt("%zu sweeps, %d trials each", parts.size(), base.trials));
}

// Mean of (squared error - tr P) with its standard error at step k.
void consistency_at(const RunResult& r, size_t m, size_t k, double& mean, double& se) {
    std::vector<double> d;
    for (const auto& t : r.trials) d.push_back(t.modes[m].sq_error[k] - t.modes[m].mse[k]);
    detail::mean_and_se(d, mean, se);
}

void consistency_criterion() {
    ScenarioConfig c = reference_config();
    c.modes = {true, false, true};
    c.trials = 200;
    c.rho_centralized = 2;
    c.seed = 77;

    ScenarioConfig tv = c;
    tv.dynamics = {true, Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, 0.01)};

    const auto t0 = Clock::now();
    const RunResult rs = run_and_account(c);
    const RunResult rt = run_and_account(tv);

    int outside = 0;
    std::string listing;
    for (const auto* r : {&rs, &rt}) {
        for (size_t m : {size_t{0}, size_t{2}}) {
            for (size_t k : {size_t{0}, size_t{9}, size_t{99}}) {
                double mean = 0.0, se = 0.0;
                consistency_at(*r, m, k, mean, se);
                const double z = se > 0.0 ? mean / se : 0.0;
                if (std::abs(mean) > 3.0 * se) ++outside;
                listing += fmt(" %s/%s/k%zu z=%.2f", r == &rs ? "static" : "tv", mode_names[m], k + 1, z);
            }
        }
    }

    ScenarioConfig id_static = reference_config();
    id_static.modes = {true, true, true};
    id_static.rho_centralized = 2;
    id_static.rho_decentralized = 2;
    ScenarioConfig id_tv = id_static;
    id_tv.dynamics = {true, Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 0.0)};
    const RunResult a = run_and_account(id_static), b = run_and_account(id_tv);
    bool identical = true;
    for (size_t t = 0; t < a.trials.size(); ++t)
        for (size_t m = 0; m < 3; ++m)
            identical = identical && a.trials[t].modes[m].mse == b.trials[t].modes[m].mse
                        && a.trials[t].modes[m].sq_error == b.trials[t].modes[m].sq_error;

    report(9, "empirical consistency", outside == 0 && identical,
           fmt("%d of 12 checks outside 3 SE, identity dynamics %s, %.0f s;%s", outside,
               identical ? "reproduce static exactly" : "DIFFER from static", seconds_since(t0), listing.c_str()));
}

} // namespace

int main() {
    const auto t0 = Clock::now();
    try {
        lift_and_solver_criteria();
        hierarchy_criteria();
        trend_criterion();
        consistency_criterion();
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance aborted: %s\n", e.what());
        return 1;
    }
    report(10, "energy feasibility", worst_energy_excess <= 1e-8,
           fmt("%d accepted steps, max excess over budget %.3g, %d failed steps excluded", accepted_steps,
               worst_energy_excess, failed_steps));

    int failed = 0;
    for (const auto& o : outcomes) failed += o.passed ? 0 : 1;
    std::printf("%zu criteria, %d failed, %.0f s\n", outcomes.size(), failed, seconds_since(t0));
    return failed ? 1 : 0;
}
