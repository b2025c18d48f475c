// config.hpp — experiment configuration: JSON schema, defaults, presets
//
// All frequencies are cyclic (GHz); times are ns. Unknown keys are rejected and
// every validation failure names the offending field path.

#pragma once

#include "json.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ionize/dressed_system.hpp"
#include "ionize/errors.hpp"
#include "ionize/lindblad.hpp"
#include "ionize/observables.hpp"
#include "ionize/units.hpp"

namespace ionize {

using json = nlohmann::ordered_json;

enum class DriveFrequencyMode {
    Fixed,       // system.drive_freq as given
    MeanPulled,  // mean of the smoothed ω_0(0) and ω_1(0)
};

struct OutputSettings {
    bool timeseries{true};
    int wigner_every{0};  // records between Wigner snapshots, 0 = none
    WignerGridSpec wigner_grid{};
    bool branches{false};
    bool semiclassical{false};
    bool delta_nr{false};
};

struct BranchSettings {
    int count{10};
    int n_max{200};
    int dim_r{240};
    int window{5};
    double threshold{0.01};
};

struct SemiclassicalSettings {
    double dt{0.0};       // ns; 0 picks the stability heuristic
    double t_end{0.0};    // ns; 0 uses the evolution time
    int time_points{201};
};

struct ExperimentConfig {
    std::optional<std::string> preset;
    SystemParams system{};
    DriveFrequencyMode drive_mode{DriveFrequencyMode::Fixed};
    PropagatorConfig propagator{};
    std::vector<int> initial_states{1};
    std::vector<double> amplitudes;  // ℰ/2π, GHz
    double t_end{0.0};               // ns
    OutputSettings outputs{};
    BranchSettings branches{};
    SemiclassicalSettings semiclassical{};
    std::string output_dir{"runs"};
    int workers{1};

    void validate() const;
};

inline std::vector<double> linspace_grid(double lo, double hi, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        out[static_cast<std::size_t>(k)] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
    }
    return out;
}

inline void ExperimentConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& what) { throw ValidationError(field, what); };
    const auto& s = system;
    if (!(s.transmon.e_c > 0.0)) fail("system.e_c", "must be > 0");
    if (!(s.transmon.e_j >= 0.0)) fail("system.e_j", "must be >= 0");
    if (s.transmon.charge_cutoff && *s.transmon.charge_cutoff < 1) fail("system.charge_cutoff", "must be >= 1");
    if (!(s.omega_r > 0.0)) fail("system.omega_r", "must be > 0");
    if (!std::isfinite(s.g)) fail("system.g", "must be finite");
    if (!(s.kappa >= 0.0)) fail("system.kappa", "must be >= 0");
    if (!(s.drive_freq > 0.0) && drive_mode == DriveFrequencyMode::Fixed) fail("system.drive_freq", "must be > 0");
    if (s.dim_t < 2) fail("system.dim_t", "must be >= 2");
    if (s.dim_r < 2) fail("system.dim_r", "must be >= 2");
    if (s.dim() > s.max_dim) fail("system.max_dim", "dim_t*dim_r exceeds the cap");
    const auto& p = propagator;
    if (p.taylor_order < 1 || p.taylor_order > 32) fail("propagator.taylor_order", "must lie in [1, 32]");
    if (p.steps_per_drive_period < 1) fail("propagator.steps_per_drive_period", "must be >= 1");
    if (!(p.truncation_threshold > 0.0)) fail("propagator.truncation_threshold", "must be > 0");
    if (p.max_dim_r < s.dim_r) fail("propagator.max_dim_r", "must be >= system.dim_r");
    if (p.record_every < 1) fail("propagator.record_every", "must be >= 1");
    if (initial_states.empty()) fail("initial_states", "must not be empty");
    for (int i : initial_states) {
        if (i < 0 || i >= s.dim_t) fail("initial_states", "labels must lie in [0, dim_t)");
    }
    if (amplitudes.empty()) fail("amplitudes", "must not be empty");
    for (double a : amplitudes) {
        if (!(a >= 0.0) || !std::isfinite(a)) fail("amplitudes", "must be finite and non-negative");
    }
    if (!(t_end > 0.0)) fail("t_end", "must be > 0");
    if (outputs.wigner_every < 0) fail("outputs.wigner_every", "must be >= 0");
    if (outputs.wigner_grid.re_points < 1 || outputs.wigner_grid.im_points < 1) {
        fail("outputs.wigner_grid.points", "must be >= 1");
    }
    const bool branch_outputs = outputs.branches || outputs.semiclassical || outputs.delta_nr;
    if (branches.count < 1) fail("branches.count", "must be >= 1");
    if (branch_outputs && branches.count > s.dim_t) fail("branches.count", "must not exceed dim_t");
    if (branches.n_max < 1) fail("branches.n_max", "must be >= 1");
    if (branches.dim_r <= branches.n_max) fail("branches.dim_r", "must exceed branches.n_max");
    if (branches.window < 3 || branches.window % 2 == 0) fail("branches.window", "must be odd and >= 3");
    if (branches.window > branches.n_max) fail("branches.window", "must not exceed branches.n_max");
    if (!(branches.threshold > 0.0)) fail("branches.threshold", "must be > 0");
    if (!(semiclassical.dt >= 0.0)) fail("semiclassical.dt", "must be >= 0");
    if (!(semiclassical.t_end >= 0.0)) fail("semiclassical.t_end", "must be >= 0");
    if (semiclassical.time_points < 2) fail("semiclassical.time_points", "must be >= 2");
    if (output_dir.empty()) fail("output_dir", "must not be empty");
    if (workers < 1) fail("workers", "must be >= 1");
    if ((outputs.semiclassical || outputs.delta_nr || drive_mode == DriveFrequencyMode::MeanPulled) && branches.count < 2) {
        fail("branches.count", "semiclassical outputs need branches 0 and 1");
    }
}

// ---- presets ----

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"main_paper", "walter", "lz_kappa20", "lz_kappa80"};
    return names;
}

inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    if (name == "main_paper" || name == "lz_kappa20" || name == "lz_kappa80") {
        c.system.transmon.e_c = 0.28;
        c.system.transmon.e_j = 50.0 * 0.28;
        c.system.omega_r = 7.5;
        c.system.g = 0.25;
        c.system.kappa = 0.02;
        c.system.drive_freq = 7.5;
        c.amplitudes = linspace_grid(0.0, 0.45, 16);
        c.branches.n_max = 200;
        c.branches.dim_r = 240;
        if (name == "main_paper") {
            c.initial_states = {0, 1};
            c.outputs.wigner_every = 10;
            c.outputs.branches = true;
            c.outputs.semiclassical = true;
            c.outputs.delta_nr = true;
        } else {
            c.initial_states = {0};
            c.drive_mode = DriveFrequencyMode::MeanPulled;
            if (name == "lz_kappa80") c.system.kappa = 0.08;
        }
        c.t_end = inverse_rate_ns(c.system.kappa);
    } else if (name == "walter") {
        c.system.transmon.e_c = 0.314;
        c.system.transmon.e_j = 55.47 * 0.314;
        c.system.omega_r = 4.804;
        c.system.g = 0.211;
        c.system.kappa = 0.04;
        c.system.drive_freq = 4.804;
        c.initial_states = {1};
        c.amplitudes = linspace_grid(0.02, 0.14, 16);
        c.t_end = 48.0;
        c.propagator.max_dim_r = 128;
        c.branches.n_max = 30;
        c.branches.dim_r = 60;
        c.outputs.branches = true;
    } else {
        throw UnknownPresetError("unknown preset '" + name + "' (known: main_paper, walter, lz_kappa20, lz_kappa80)");
    }
    return c;
}

// ---- JSON reading ----

namespace detail {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_.empty() ? "<root>" : path_, "must be an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) { return j_.at(key); }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ValidationError(field(key), "must be a number");
        out = v.get<double>();
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ValidationError(field(key), "must be an integer");
        out = v.get<int>();
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ValidationError(field(key), "must be true or false");
        out = v.get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ValidationError(field(key), "must be a string");
        out = v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(field(it.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_system(const json& j, ExperimentConfig& c) {
    ObjectReader r(j, "system");
    auto& s = c.system;
    r.number("e_c", s.transmon.e_c);
    if (r.has("e_j") && r.has("e_j_over_e_c")) {
        throw ValidationError("system.e_j", "give either e_j or e_j_over_e_c, not both");
    }
    r.number("e_j", s.transmon.e_j);
    if (r.has("e_j_over_e_c")) {
        double ratio = 0.0;
        r.number("e_j_over_e_c", ratio);
        s.transmon.e_j = ratio * s.transmon.e_c;
    }
    if (r.has("charge_cutoff")) {
        int cutoff = 0;
        r.integer("charge_cutoff", cutoff);
        s.transmon.charge_cutoff = cutoff;
    }
    r.number("omega_r", s.omega_r);
    r.number("g", s.g);
    r.number("kappa", s.kappa);
    if (r.has("drive_freq")) {
        const auto& v = r.at("drive_freq");
        if (v.is_string()) {
            if (v.get<std::string>() != "mean_pulled") {
                throw ValidationError("system.drive_freq", "must be a number or \"mean_pulled\"");
            }
            c.drive_mode = DriveFrequencyMode::MeanPulled;
        } else {
            r.number("drive_freq", s.drive_freq);
            c.drive_mode = DriveFrequencyMode::Fixed;
        }
    }
    r.integer("dim_t", s.dim_t);
    r.integer("dim_r", s.dim_r);
    if (r.has("max_dim")) {
        int cap = 0;
        r.integer("max_dim", cap);
        if (cap < 4) throw ValidationError("system.max_dim", "must be >= 4");
        s.max_dim = static_cast<std::size_t>(cap);
    }
    r.finish();
}

inline void read_propagator(const json& j, PropagatorConfig& p) {
    ObjectReader r(j, "propagator");
    r.integer("taylor_order", p.taylor_order);
    r.integer("steps_per_drive_period", p.steps_per_drive_period);
    r.number("truncation_threshold", p.truncation_threshold);
    r.integer("max_dim_r", p.max_dim_r);
    r.integer("record_every", p.record_every);
    r.boolean("magnus_commutator", p.magnus_commutator);
    r.finish();
}

inline void read_outputs(const json& j, OutputSettings& o) {
    ObjectReader r(j, "outputs");
    r.boolean("timeseries", o.timeseries);
    r.integer("wigner_every", o.wigner_every);
    if (r.has("wigner_grid")) {
        ObjectReader g(r.at("wigner_grid"), "outputs.wigner_grid");
        double extent = o.wigner_grid.re_max;
        int points = o.wigner_grid.re_points;
        g.number("extent", extent);
        g.integer("points", points);
        g.finish();
        if (!(extent > 0.0)) throw ValidationError("outputs.wigner_grid.extent", "must be > 0");
        o.wigner_grid = WignerGridSpec::square(extent, points);
    }
    r.boolean("branches", o.branches);
    r.boolean("semiclassical", o.semiclassical);
    r.boolean("delta_nr", o.delta_nr);
    r.finish();
}

inline void read_branches(const json& j, BranchSettings& b) {
    ObjectReader r(j, "branches");
    r.integer("count", b.count);
    r.integer("n_max", b.n_max);
    r.integer("dim_r", b.dim_r);
    r.integer("window", b.window);
    r.number("threshold", b.threshold);
    r.finish();
}

inline void read_semiclassical(const json& j, SemiclassicalSettings& s) {
    ObjectReader r(j, "semiclassical");
    r.number("dt", s.dt);
    r.number("t_end", s.t_end);
    r.integer("time_points", s.time_points);
    r.finish();
}

}  // namespace detail

// Builds a config from parsed JSON: preset (if named) or defaults, then the
// file's fields on top.
inline ExperimentConfig config_from_json(const json& j) {
    detail::ObjectReader r(j, "");
    ExperimentConfig c;
    if (r.has("preset")) {
        std::string name;
        r.string("preset", name);
        c = preset_config(name);
    }
    if (r.has("system")) detail::read_system(r.at("system"), c);
    if (r.has("propagator")) detail::read_propagator(r.at("propagator"), c.propagator);
    if (r.has("initial_states")) {
        const auto& v = r.at("initial_states");
        if (!v.is_array()) throw ValidationError("initial_states", "must be an array of integers");
        c.initial_states.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ValidationError("initial_states", "must be an array of integers");
            c.initial_states.push_back(e.get<int>());
        }
    }
    if (r.has("amplitudes") && r.has("amplitude_grid")) {
        throw ValidationError("amplitudes", "give either amplitudes or amplitude_grid, not both");
    }
    if (r.has("amplitudes")) {
        const auto& v = r.at("amplitudes");
        if (!v.is_array()) throw ValidationError("amplitudes", "must be an array of numbers");
        c.amplitudes.clear();
        for (const auto& e : v) {
            if (!e.is_number()) throw ValidationError("amplitudes", "must be an array of numbers");
            c.amplitudes.push_back(e.get<double>());
        }
    }
    if (r.has("amplitude_grid")) {
        detail::ObjectReader g(r.at("amplitude_grid"), "amplitude_grid");
        double start = 0.0, stop = 0.0;
        int count = 0;
        g.number("start", start);
        g.number("stop", stop);
        g.integer("count", count);
        g.finish();
        if (count < 1) throw ValidationError("amplitude_grid.count", "must be >= 1");
        c.amplitudes = linspace_grid(start, stop, count);
    }
    if (r.has("t_end") && r.has("t_end_lifetimes")) {
        throw ValidationError("t_end", "give either t_end or t_end_lifetimes, not both");
    }
    r.number("t_end", c.t_end);
    if (r.has("t_end_lifetimes")) {
        double lifetimes = 0.0;
        r.number("t_end_lifetimes", lifetimes);
        if (!(c.system.kappa > 0.0)) throw ValidationError("t_end_lifetimes", "needs kappa > 0");
        c.t_end = lifetimes * inverse_rate_ns(c.system.kappa);
    }
    if (r.has("outputs")) detail::read_outputs(r.at("outputs"), c.outputs);
    if (r.has("branches")) detail::read_branches(r.at("branches"), c.branches);
    if (r.has("semiclassical")) detail::read_semiclassical(r.at("semiclassical"), c.semiclassical);
    r.string("output_dir", c.output_dir);
    r.integer("workers", c.workers);
    r.finish();
    c.validate();
    return c;
}

inline ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// Canonical JSON of everything that determines the outputs (output_dir and
// workers excluded).
inline json config_to_json(const ExperimentConfig& c) {
    json j;
    if (c.preset) j["preset"] = *c.preset;
    const auto& s = c.system;
    json sys;
    sys["e_c"] = s.transmon.e_c;
    sys["e_j"] = s.transmon.e_j;
    sys["charge_cutoff"] = s.transmon.cutoff_for(s.dim_t);
    sys["omega_r"] = s.omega_r;
    sys["g"] = s.g;
    sys["kappa"] = s.kappa;
    if (c.drive_mode == DriveFrequencyMode::MeanPulled) {
        sys["drive_freq"] = "mean_pulled";
    } else {
        sys["drive_freq"] = s.drive_freq;
    }
    sys["dim_t"] = s.dim_t;
    sys["dim_r"] = s.dim_r;
    sys["max_dim"] = s.max_dim;
    j["system"] = sys;
    const auto& p = c.propagator;
    j["propagator"] = {{"taylor_order", p.taylor_order},
                       {"steps_per_drive_period", p.steps_per_drive_period},
                       {"truncation_threshold", p.truncation_threshold},
                       {"max_dim_r", p.max_dim_r},
                       {"record_every", p.record_every},
                       {"magnus_commutator", p.magnus_commutator}};
    j["initial_states"] = c.initial_states;
    j["amplitudes"] = c.amplitudes;
    j["t_end"] = c.t_end;
    j["outputs"] = {{"timeseries", c.outputs.timeseries},
                    {"wigner_every", c.outputs.wigner_every},
                    {"wigner_grid", {{"extent", c.outputs.wigner_grid.re_max}, {"points", c.outputs.wigner_grid.re_points}}},
                    {"branches", c.outputs.branches},
                    {"semiclassical", c.outputs.semiclassical},
                    {"delta_nr", c.outputs.delta_nr}};
    j["branches"] = {{"count", c.branches.count},
                     {"n_max", c.branches.n_max},
                     {"dim_r", c.branches.dim_r},
                     {"window", c.branches.window},
                     {"threshold", c.branches.threshold}};
    j["semiclassical"] = {{"dt", c.semiclassical.dt},
                          {"t_end", c.semiclassical.t_end},
                          {"time_points", c.semiclassical.time_points}};
    return j;
}

// 64-bit FNV-1a, hex.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

inline std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

}  // namespace ionize
