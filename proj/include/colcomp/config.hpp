#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <colcomp/model.hpp>

namespace colcomp {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class TopologyKind { Full, Geometric, Explicit };

struct TopologySpec {
    TopologyKind kind = TopologyKind::Full;
    double radius = 1.0;
    std::uint64_t seed = 7;
    Eigen::MatrixXi matrix; // explicit adjacency, M x N
};

struct ModeSet {
    bool centralized = true;
    bool decentralized = true;
    bool benchmark = true;
};

// x(k) = transition x(k-1) + n_s with n_s ~ (0, noise). Static when disabled.
struct DynamicsSpec {
    bool timevarying = false;
    Matrix transition; // P x P, or 1 x 1 meaning a scalar times I
    Matrix noise;      // P x P, or 1 x 1 meaning a scalar times I
};

struct SweepSpec {
    std::string parameter; // any config key, e.g. snr.observation_db
    std::vector<std::string> values;

    bool active() const { return !parameter.empty(); }
};

struct ScenarioConfig {
    Dimensions dims{3, 6, 7, 3, 3};
    double snr_obs_db = 20.0;
    double snr_collab_db = 20.0;
    double snr_fc_db = 20.0;
    double prior_variance = 1.0;
    TopologySpec topology;
    std::vector<double> mu{1.0}; // one value broadcast to all sensors, or N values
    Index horizon = 100;
    int trials = 20;
    std::uint64_t seed = 1;
    int rho_centralized = 20;
    int rho_decentralized = 100;
    bool decentralized_closed_form_gain = false; // FC applies the unconstrained gain in decentralized mode
    ModeSet modes;
    DynamicsSpec dynamics;
    SweepSpec sweep;
    int threads = 0; // 0 picks the hardware concurrency

    EnergyBudget budget() const {
        if (mu.size() == 1) return EnergyBudget::uniform(dims.N, mu.front());
        if (static_cast<Index>(mu.size()) != dims.N)
            throw ConfigError("budget.mu must hold one value or N = " + std::to_string(dims.N) + " values");
        return {Eigen::Map<const Vector>(mu.data(), static_cast<Index>(mu.size()))};
    }

    std::optional<StateModel> state_model() const {
        if (!dynamics.timevarying) return std::nullopt;
        auto expand = [&](const Matrix& m, const char* key, double fallback) -> Matrix {
            if (m.size() == 0) return fallback * identity(dims.P);
            if (m.rows() == 1 && m.cols() == 1) return m(0, 0) * identity(dims.P);
            if (m.rows() != dims.P || m.cols() != dims.P)
                throw ConfigError(std::string(key) + " must be a scalar or a P x P matrix");
            return m;
        };
        return StateModel{expand(dynamics.transition, "dynamics.transition", 1.0),
                          expand(dynamics.noise, "dynamics.noise", 0.0)};
    }

    void validate() const {
        dims.validate();
        for (double v : {snr_obs_db, snr_collab_db, snr_fc_db})
            if (!std::isfinite(v)) throw ConfigError("SNR values must be finite");
        if (!(prior_variance > 0.0)) throw ConfigError("prior variance must be positive");
        if (horizon < 1) throw ConfigError("run.horizon must be >= 1");
        if (trials < 1) throw ConfigError("run.trials must be >= 1");
        if (rho_centralized < 1 || rho_decentralized < 1) throw ConfigError("rho values must be >= 1");
        if (!modes.centralized && !modes.decentralized && !modes.benchmark)
            throw ConfigError("run.modes selects no mode");
        for (double m : mu)
            if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("budget.mu values must be positive");
        (void)budget();
        if (topology.kind == TopologyKind::Geometric && !(topology.radius >= 0.0))
            throw ConfigError("topology.radius must be >= 0");
        if (topology.kind == TopologyKind::Explicit
            && (topology.matrix.rows() != dims.M || topology.matrix.cols() != dims.N))
            throw ConfigError("topology.matrix must be M x N");
        if (dynamics.timevarying) (void)state_model();
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    if (t == "sqrt2" || t == "sqrt(2)") return std::sqrt(2.0);
    try {
        size_t pos = 0;
        const double d = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d != std::floor(d)) throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
    return static_cast<long long>(d);
}

// Whitespace or comma separated list.
inline std::vector<std::string> parse_list(const std::string& v) {
    std::string t = v;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// "a b c; d e f" with rows separated by ';'.
inline Matrix parse_matrix(const std::string& key, const std::string& v) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : split(v, ';')) {
        if (r.empty()) continue;
        std::vector<double> row;
        for (const auto& tok : parse_list(r)) row.push_back(parse_double(key, tok));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("key '" + key + "': matrix rows differ in length");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("key '" + key + "': empty matrix");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return m;
}

inline std::string format_matrix(const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        if (i) os << "; ";
        for (Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    }
    return os.str();
}

} // namespace detail

// Sets one key. Unknown keys and malformed values throw ConfigError naming the key.
inline void apply_config(ScenarioConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    const std::string v = trim(value);
    auto as_index = [&] { return static_cast<Index>(parse_int(key, v)); };
    if (key == "dims.P") c.dims.P = as_index();
    else if (key == "dims.L") c.dims.L = as_index();
    else if (key == "dims.N") c.dims.N = as_index();
    else if (key == "dims.M") c.dims.M = as_index();
    else if (key == "dims.S") c.dims.S = as_index();
    else if (key == "snr.observation_db") c.snr_obs_db = parse_double(key, v);
    else if (key == "snr.collaboration_db") c.snr_collab_db = parse_double(key, v);
    else if (key == "snr.fc_db") c.snr_fc_db = parse_double(key, v);
    else if (key == "snr.all_db") c.snr_obs_db = c.snr_collab_db = c.snr_fc_db = parse_double(key, v);
    else if (key == "prior.variance") c.prior_variance = parse_double(key, v);
    else if (key == "topology.kind") {
        if (v == "full") c.topology.kind = TopologyKind::Full;
        else if (v == "geometric") c.topology.kind = TopologyKind::Geometric;
        else if (v == "explicit") c.topology.kind = TopologyKind::Explicit;
        else throw ConfigError("topology.kind must be full, geometric or explicit");
    } else if (key == "topology.radius") {
        c.topology.radius = parse_double(key, v);
        c.topology.kind = TopologyKind::Geometric;
    } else if (key == "topology.seed") c.topology.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "topology.matrix") {
        const Matrix m = parse_matrix(key, v);
        c.topology.matrix = m.cast<int>();
        if ((c.topology.matrix.cast<double>() - m).cwiseAbs().maxCoeff() != 0.0)
            throw ConfigError("topology.matrix entries must be 0 or 1");
    } else if (key == "budget.mu") {
        c.mu.clear();
        for (const auto& t : parse_list(v)) c.mu.push_back(parse_double(key, t));
        if (c.mu.empty()) throw ConfigError("budget.mu is empty");
    } else if (key == "run.horizon") c.horizon = as_index();
    else if (key == "run.trials") c.trials = static_cast<int>(parse_int(key, v));
    else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "run.rho_centralized") c.rho_centralized = static_cast<int>(parse_int(key, v));
    else if (key == "run.rho_decentralized") c.rho_decentralized = static_cast<int>(parse_int(key, v));
    else if (key == "run.decentralized_gain") {
        if (v == "constrained") c.decentralized_closed_form_gain = false;
        else if (v == "closed_form") c.decentralized_closed_form_gain = true;
        else throw ConfigError("run.decentralized_gain must be constrained or closed_form");
    } else if (key == "run.threads") c.threads = static_cast<int>(parse_int(key, v));
    else if (key == "run.modes") {
        c.modes = {false, false, false};
        for (const auto& m : parse_list(v)) {
            if (m == "centralized") c.modes.centralized = true;
            else if (m == "decentralized") c.modes.decentralized = true;
            else if (m == "benchmark") c.modes.benchmark = true;
            else if (m == "all") c.modes = {true, true, true};
            else throw ConfigError("run.modes: unknown mode '" + m + "'");
        }
    } else if (key == "dynamics.kind") {
        if (v == "static") c.dynamics.timevarying = false;
        else if (v == "timevarying") c.dynamics.timevarying = true;
        else throw ConfigError("dynamics.kind must be static or timevarying");
    } else if (key == "dynamics.transition") c.dynamics.transition = parse_matrix(key, v);
    else if (key == "dynamics.noise") c.dynamics.noise = parse_matrix(key, v);
    else if (key == "sweep.parameter") c.sweep.parameter = v;
    else if (key == "sweep.values") c.sweep.values = parse_list(v);
    else throw ConfigError("unknown config key '" + key + "'");
}

// key = value lines; '#' starts a comment; "[section]" prefixes following keys.
inline ScenarioConfig parse_config(const std::string& text, ScenarioConfig base = {}) {
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        try {
            apply_config(base, key, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

// Round-trippable text form of a config.
inline std::string echo_config(const ScenarioConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "dims.P = " << c.dims.P << "\ndims.L = " << c.dims.L << "\ndims.N = " << c.dims.N
       << "\ndims.M = " << c.dims.M << "\ndims.S = " << c.dims.S << "\n";
    os << "snr.observation_db = " << c.snr_obs_db << "\nsnr.collaboration_db = " << c.snr_collab_db
       << "\nsnr.fc_db = " << c.snr_fc_db << "\nprior.variance = " << c.prior_variance << "\n";
    const char* kinds[] = {"full", "geometric", "explicit"};
    os << "topology.kind = " << kinds[static_cast<int>(c.topology.kind)] << "\n";
    if (c.topology.kind == TopologyKind::Geometric)
        os << "topology.radius = " << c.topology.radius << "\ntopology.seed = " << c.topology.seed << "\n";
    if (c.topology.kind == TopologyKind::Explicit)
        os << "topology.matrix = " << detail::format_matrix(c.topology.matrix.cast<double>()) << "\n";
    os << "budget.mu =";
    for (double m : c.mu) os << " " << m;
    os << "\nrun.horizon = " << c.horizon << "\nrun.trials = " << c.trials << "\nrun.seed = " << c.seed
       << "\nrun.rho_centralized = " << c.rho_centralized << "\nrun.rho_decentralized = " << c.rho_decentralized
       << "\nrun.decentralized_gain = " << (c.decentralized_closed_form_gain ? "closed_form" : "constrained")
       << "\nrun.modes =" << (c.modes.centralized ? " centralized" : "")
       << (c.modes.decentralized ? " decentralized" : "") << (c.modes.benchmark ? " benchmark" : "") << "\n";
    os << "dynamics.kind = " << (c.dynamics.timevarying ? "timevarying" : "static") << "\n";
    if (c.dynamics.timevarying) {
        const StateModel sm = *c.state_model();
        os << "dynamics.transition = " << detail::format_matrix(sm.transition)
           << "\ndynamics.noise = " << detail::format_matrix(sm.noise_cov) << "\n";
    }
    if (c.sweep.active()) {
        os << "sweep.parameter = " << c.sweep.parameter << "\nsweep.values =";
        for (const auto& v : c.sweep.values) os << " " << v;
        os << "\n";
    }
    return os.str();
}

} // namespace colcomp
