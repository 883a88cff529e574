#pragma once

// Scenario configuration: a JSON document describing one run of the
// identify / dual-loop / oracle-check pipelines.  Parsing is strict --
// unknown keys are errors, so typos fail loudly instead of silently running
// with defaults -- and every numeric constraint is checked at load time.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "viscosim/admittance.hpp"
#include "viscosim/field.hpp"
#include "viscosim/forcing.hpp"
#include "viscosim/material.hpp"
#include "viscosim/oracle.hpp"

namespace viscosim {

using nlohmann::json;

// Configuration / usage problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RunMode { identify, dual_loop, oracle_check };

struct ReplayPlan {
    bool enabled = false;
    std::size_t capacity = 8;
    double record_start = 0.0;
    double record_duration = 0.0;
    double replay_at = 0.0;
};

struct IdentifySettings {
    std::size_t probes = 8;
    double gain = 100.0;      // estimation gain K
    double leak = 5.0;        // observer leak L'
    double noise_sigma = 0.0; // additive measurement noise
    double pe_window = 2.0;   // sliding Gram horizon [s]
    double pe_interval = 0.1; // margin evaluation cadence [s]
    ReplayPlan replay;
    double th_rel_error = 0.01;
    double th_pe_min = 1e-4;
};

struct DualLoopSettings {
    ControlGains gains;      // lambda1/lambda2 from config, a1/a2 from the material
    bool inner = true;       // backstepping boundary loop active
    double target_force = 1.0;
    double rise_tau = 0.5;   // smooth force ramp-in time constant
    std::size_t kernel_panels = 64;
    double pitch = 2.0;      // taxel pitch [mm]
    double activation_threshold = 1e-4;
    double th_fte_percent = 5.0;
    double settle_window = 2.0; // trailing window for the steady-state figure
};

struct OracleSettings {
    std::vector<EigenMode> modes;
    double th_rel_l2 = 0.01;
};

struct Scenario {
    std::string name;
    RunMode mode = RunMode::identify;
    std::uint64_t seed = 0;
    double duration = 1.0;
    GridSpec grid;
    ViscoParams theta;
    double cfl_factor = 0.9;
    std::size_t decimation = 10;
    bool snapshots = false;
    ForceProgram force;
    IdentifySettings ident;
    DualLoopSettings dual;
    OracleSettings oracle;
    std::string config_dump; // canonical serialization, hashed into the manifest
};

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!j.is_object())
        throw ConfigError("config section '" + where + "' must be an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || item.key() == a;
        if (!ok)
            throw ConfigError("unknown key '" + item.key() + "' in section '" + where + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key))
        return fallback;
    return j.at(key).get<T>();
}

inline GridSpec parse_grid(const json& j) {
    check_keys(j, {"nx", "ny", "nz", "delta", "ly", "lz", "transverse"}, "grid");
    GridSpec g;
    g.nx = get_or<std::size_t>(j, "nx", g.nx);
    g.ny = get_or<std::size_t>(j, "ny", g.ny);
    g.nz = get_or<std::size_t>(j, "nz", g.nz);
    g.delta = get_or<double>(j, "delta", g.delta);
    g.ly = get_or<double>(j, "ly", g.ly);
    g.lz = get_or<double>(j, "lz", g.lz);
    g.transverse = get_or<bool>(j, "transverse", g.transverse);
    try {
        g.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    return g;
}

inline ViscoParams parse_material(const json& j) {
    check_keys(j, {"k1", "k2", "b", "eps", "theta"}, "material");
    if (j.contains("theta")) {
        if (j.contains("k1") || j.contains("k2") || j.contains("b"))
            throw ConfigError("material: give either network coefficients or theta, not both");
        const json& t = j.at("theta");
        check_keys(t, {"eps", "a1", "a2", "lambda"}, "material.theta");
        ViscoParams p;
        p.eps = t.at("eps").get<double>();
        p.a1 = get_or<double>(t, "a1", 0.0);
        p.a2 = get_or<double>(t, "a2", 0.0);
        p.lambda = get_or<double>(t, "lambda", 0.0);
        if (!(p.eps > 0.0))
            throw ConfigError("material.theta: eps must be positive");
        return p;
    }
    for (const char* k : {"k1", "k2", "b", "eps"})
        if (!j.contains(k))
            throw ConfigError(std::string("material: missing key '") + k + "'");
    try {
        return pde_params(burgers_coeffs(j.at("k1").get<double>(), j.at("k2").get<double>(),
                                         j.at("b").get<double>()),
                          j.at("eps").get<double>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("material: ") + e.what());
    }
}

inline ForceTerm parse_term(const json& j, std::size_t idx) {
    const std::string where = "force.terms[" + std::to_string(idx) + "]";
    check_keys(j, {"kind", "amplitude", "t_on", "t_off", "freq_hz", "phase", "tau"}, where);
    ForceTerm t;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "step")
        t.kind = ForceTerm::Kind::step;
    else if (kind == "ramp")
        t.kind = ForceTerm::Kind::ramp;
    else if (kind == "sine")
        t.kind = ForceTerm::Kind::sine;
    else if (kind == "exp_rise")
        t.kind = ForceTerm::Kind::exp_rise;
    else
        throw ConfigError(where + ": unknown kind '" + kind + "'");
    t.amplitude = get_or<double>(j, "amplitude", 0.0);
    t.t_on = get_or<double>(j, "t_on", 0.0);
    t.t_off = get_or<double>(j, "t_off", t.t_off);
    t.freq_hz = get_or<double>(j, "freq_hz", 0.0);
    t.phase = get_or<double>(j, "phase", 0.0);
    t.tau = get_or<double>(j, "tau", 1.0);
    if (t.kind == ForceTerm::Kind::exp_rise && !(t.tau > 0.0))
        throw ConfigError(where + ": tau must be positive");
    return t;
}

inline ForceProgram parse_force(const json& j) {
    check_keys(j, {"patch", "terms"}, "force");
    ForceProgram p;
    if (j.contains("patch")) {
        const json& q = j.at("patch");
        check_keys(q, {"x0", "x1", "y0", "y1", "z0", "z1", "smooth"}, "force.patch");
        p.patch.x0 = get_or<double>(q, "x0", 0.0);
        p.patch.x1 = get_or<double>(q, "x1", 1.0);
        p.patch.y0 = get_or<double>(q, "y0", 0.0);
        p.patch.y1 = get_or<double>(q, "y1", 1.0);
        p.patch.z0 = get_or<double>(q, "z0", 0.0);
        p.patch.z1 = get_or<double>(q, "z1", 1.0);
        p.patch.smooth = get_or<bool>(q, "smooth", true);
        try {
            p.patch.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("force.patch: ") + e.what());
        }
    }
    if (j.contains("terms")) {
        const json& terms = j.at("terms");
        if (!terms.is_array())
            throw ConfigError("force.terms must be an array");
        for (std::size_t i = 0; i < terms.size(); ++i)
            p.terms.push_back(parse_term(terms[i], i));
    }
    return p;
}

inline IdentifySettings parse_identification(const json& j) {
    check_keys(j,
               {"probes", "gain", "leak", "noise_sigma", "pe_window", "pe_interval", "replay",
                "thresholds"},
               "identification");
    IdentifySettings s;
    s.probes = get_or<std::size_t>(j, "probes", s.probes);
    s.gain = get_or<double>(j, "gain", s.gain);
    s.leak = get_or<double>(j, "leak", s.leak);
    s.noise_sigma = get_or<double>(j, "noise_sigma", s.noise_sigma);
    s.pe_window = get_or<double>(j, "pe_window", s.pe_window);
    s.pe_interval = get_or<double>(j, "pe_interval", s.pe_interval);
    if (s.probes < 1)
        throw ConfigError("identification: probes must be >= 1");
    if (!(s.gain > 0.0) || !(s.leak > 0.0))
        throw ConfigError("identification: gain and leak must be positive");
    if (!(s.pe_window > 0.0) || !(s.pe_interval > 0.0))
        throw ConfigError("identification: pe_window and pe_interval must be positive");
    if (s.noise_sigma < 0.0)
        throw ConfigError("identification: noise_sigma must be nonnegative");
    if (j.contains("replay")) {
        const json& r = j.at("replay");
        check_keys(r, {"capacity", "record_start", "record_duration", "replay_at"},
                   "identification.replay");
        s.replay.enabled = true;
        s.replay.capacity = get_or<std::size_t>(r, "capacity", s.replay.capacity);
        s.replay.record_start = r.at("record_start").get<double>();
        s.replay.record_duration = r.at("record_duration").get<double>();
        s.replay.replay_at = r.at("replay_at").get<double>();
        if (!(s.replay.record_duration > 0.0))
            throw ConfigError("identification.replay: record_duration must be positive");
        if (s.replay.replay_at < s.replay.record_start + s.replay.record_duration)
            throw ConfigError("identification.replay: replay_at precedes the recorded window");
        if (s.replay.capacity < 1)
            throw ConfigError("identification.replay: capacity must be >= 1");
    }
    if (j.contains("thresholds")) {
        const json& t = j.at("thresholds");
        check_keys(t, {"rel_error", "pe_min_eig"}, "identification.thresholds");
        s.th_rel_error = get_or<double>(t, "rel_error", s.th_rel_error);
        s.th_pe_min = get_or<double>(t, "pe_min_eig", s.th_pe_min);
    } else if (s.noise_sigma > 0.0) {
        s.th_rel_error = 0.05; // noisy measurements get a looser default
    }
    return s;
}

inline DualLoopSettings parse_dual(const json& gains_j, const json& control_j,
                                   const json& sensor_j, const json& thresholds_j,
                                   const ViscoParams& theta) {
    DualLoopSettings s;
    check_keys(gains_j, {"lambda1", "lambda2"}, "gains");
    s.gains.lambda1 = gains_j.at("lambda1").get<double>();
    s.gains.lambda2 = gains_j.at("lambda2").get<double>();
    s.gains.a1 = theta.a1;
    s.gains.a2 = theta.a2;
    try {
        s.gains.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("gains: ") + e.what());
    }
    if (!control_j.is_null()) {
        check_keys(control_j, {"inner", "target_force", "rise_tau", "kernel_panels"}, "control");
        s.inner = get_or<bool>(control_j, "inner", s.inner);
        s.target_force = get_or<double>(control_j, "target_force", s.target_force);
        s.rise_tau = get_or<double>(control_j, "rise_tau", s.rise_tau);
        s.kernel_panels = get_or<std::size_t>(control_j, "kernel_panels", s.kernel_panels);
        if (!(s.rise_tau > 0.0))
            throw ConfigError("control: rise_tau must be positive");
        if (s.kernel_panels < 1)
            throw ConfigError("control: kernel_panels must be >= 1");
    }
    if (!sensor_j.is_null()) {
        check_keys(sensor_j, {"pitch", "activation_threshold"}, "sensor");
        s.pitch = get_or<double>(sensor_j, "pitch", s.pitch);
        s.activation_threshold = get_or<double>(sensor_j, "activation_threshold",
                                                s.activation_threshold);
        if (!(s.pitch > 0.0))
            throw ConfigError("sensor: pitch must be positive");
        if (s.activation_threshold < 0.0)
            throw ConfigError("sensor: activation_threshold must be nonnegative");
    }
    if (!thresholds_j.is_null()) {
        check_keys(thresholds_j, {"fte_percent", "settle_window"}, "thresholds");
        s.th_fte_percent = get_or<double>(thresholds_j, "fte_percent", s.th_fte_percent);
        s.settle_window = get_or<double>(thresholds_j, "settle_window", s.settle_window);
    }
    return s;
}

inline OracleSettings parse_oracle(const json& initial_j, const json& thresholds_j) {
    OracleSettings s;
    check_keys(initial_j, {"modes"}, "initial");
    const json& modes = initial_j.at("modes");
    if (!modes.is_array() || modes.empty())
        throw ConfigError("initial.modes must be a non-empty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const json& m = modes[i];
        check_keys(m, {"n", "m", "p", "coeff"}, "initial.modes[" + std::to_string(i) + "]");
        EigenMode mode;
        mode.n = get_or<int>(m, "n", 1);
        mode.m = get_or<int>(m, "m", 1);
        mode.p = get_or<int>(m, "p", 1);
        mode.coeff = m.at("coeff").get<double>();
        if (mode.n < 1 || mode.m < 1 || mode.p < 1)
            throw ConfigError("initial.modes: mode numbers must be >= 1");
        s.modes.push_back(mode);
    }
    if (!thresholds_j.is_null()) {
        check_keys(thresholds_j, {"rel_l2"}, "thresholds");
        s.th_rel_l2 = get_or<double>(thresholds_j, "rel_l2", s.th_rel_l2);
    }
    return s;
}

} // namespace detail

inline Scenario parse_scenario(const json& j) {
    detail::check_keys(j,
                       {"name", "mode", "seed", "duration", "grid", "material", "time", "output",
                        "force", "identification", "gains", "control", "sensor", "initial",
                        "thresholds"},
                       "(top level)");
    Scenario sc;
    sc.name = detail::get_or<std::string>(j, "name", "unnamed");
    const std::string mode = j.contains("mode") ? j.at("mode").get<std::string>() : "";
    if (mode == "identify")
        sc.mode = RunMode::identify;
    else if (mode == "dual_loop")
        sc.mode = RunMode::dual_loop;
    else if (mode == "oracle_check")
        sc.mode = RunMode::oracle_check;
    else
        throw ConfigError("mode must be one of identify, dual_loop, oracle_check");

    sc.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
    if (!j.contains("duration"))
        throw ConfigError("duration is required");
    sc.duration = j.at("duration").get<double>();
    if (!(sc.duration > 0.0))
        throw ConfigError("duration must be positive");

    sc.grid = j.contains("grid") ? detail::parse_grid(j.at("grid")) : GridSpec{};
    if (!j.contains("material"))
        throw ConfigError("material section is required");
    sc.theta = detail::parse_material(j.at("material"));

    if (j.contains("time")) {
        detail::check_keys(j.at("time"), {"cfl_factor"}, "time");
        sc.cfl_factor = detail::get_or<double>(j.at("time"), "cfl_factor", sc.cfl_factor);
        if (!(sc.cfl_factor > 0.0) || sc.cfl_factor > 1.0)
            throw ConfigError("time.cfl_factor must lie in (0, 1]");
    }
    if (j.contains("output")) {
        detail::check_keys(j.at("output"), {"decimation", "snapshots"}, "output");
        sc.decimation = detail::get_or<std::size_t>(j.at("output"), "decimation", sc.decimation);
        sc.snapshots = detail::get_or<bool>(j.at("output"), "snapshots", sc.snapshots);
        if (sc.decimation < 1)
            throw ConfigError("output.decimation must be >= 1");
    }
    if (j.contains("force"))
        sc.force = detail::parse_force(j.at("force"));

    switch (sc.mode) {
    case RunMode::identify:
        if (j.contains("gains") || j.contains("control") || j.contains("sensor") ||
            j.contains("initial"))
            throw ConfigError("identify scenarios take no gains/control/sensor/initial sections");
        if (sc.force.terms.empty())
            throw ConfigError("identify scenarios need a force program with at least one term");
        sc.ident = j.contains("identification")
                       ? detail::parse_identification(j.at("identification"))
                       : IdentifySettings{};
        if (sc.ident.probes > sc.grid.interior_count())
            throw ConfigError("identification: more probes than interior nodes");
        break;
    case RunMode::dual_loop: {
        if (j.contains("identification") || j.contains("initial"))
            throw ConfigError("dual_loop scenarios take no identification/initial sections");
        if (!j.contains("gains"))
            throw ConfigError("dual_loop scenarios require a gains section");
        const json null_j;
        sc.dual = detail::parse_dual(j.at("gains"),
                                     j.contains("control") ? j.at("control") : null_j,
                                     j.contains("sensor") ? j.at("sensor") : null_j,
                                     j.contains("thresholds") ? j.at("thresholds") : null_j,
                                     sc.theta);
        if (!(sc.theta.a2 > 0.0))
            throw ConfigError("dual_loop scenarios need a2 > 0 (a viscous force-rate path)");
        if (!(sc.theta.lambda < 0.0))
            throw ConfigError("dual_loop scenarios need lambda < 0 (a restoring material)");
        break;
    }
    case RunMode::oracle_check: {
        if (j.contains("identification") || j.contains("gains") || j.contains("control") ||
            j.contains("sensor"))
            throw ConfigError("oracle_check scenarios take only grid/material/initial sections");
        if (!j.contains("initial"))
            throw ConfigError("oracle_check scenarios require an initial section");
        const json null_j;
        sc.oracle = detail::parse_oracle(j.at("initial"),
                                         j.contains("thresholds") ? j.at("thresholds") : null_j);
        if (sc.theta.a1 != 0.0 || sc.theta.a2 != 0.0)
            throw ConfigError("oracle_check scenarios require a1 = a2 = 0 (unforced dynamics)");
        break;
    }
    }

    sc.config_dump = j.dump();
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    try {
        return parse_scenario(j);
    } catch (const json::exception& e) {
        throw ConfigError("config error in " + path + ": " + e.what());
    }
}

// FNV-1a over the canonical config serialization; stamped into the manifest
// so artifacts can be traced back to the exact configuration.
inline std::string config_hash(const std::string& dump) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace viscosim
