// sweep.hpp — sweep execution, per-run persistence and the run manifest
//
// Layout of an output directory:
//   manifest.json                 written last by the coordinator
//   branches.csv, resonances.csv  static branch analysis
//   semiclassical.csv, delta_nr.csv
//   run_000/meta.json, run_000/timeseries.csv, run_000/wigner_<record>.csv, ...
//
// Runs are ordered amplitude-major, then initial state, and dispatched to
// workers round-robin; every file a run writes depends only on the config.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ionize/branch_ladders.hpp"
#include "ionize/config.hpp"
#include "ionize/dressed_system.hpp"
#include "ionize/errors.hpp"
#include "ionize/lindblad.hpp"
#include "ionize/observables.hpp"
#include "ionize/semiclassical.hpp"
#include "ionize/transmon_spectrum.hpp"
#include "ionize/units.hpp"

namespace ionize {

namespace fs = std::filesystem;

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

struct RunRecord {
    std::size_t index{0};
    double amplitude{0.0};
    int initial_state{0};
    std::string directory;             // relative to the manifest
    std::vector<std::string> outputs;  // relative to the manifest
    std::string status{"pending"};     // completed | failed
    std::string error;
    double wall_time_s{0.0};
};

struct SweepOutput {
    std::string name;
    std::string path;  // relative to the manifest; empty on failure
    std::string status;
    std::string error;
};

struct RunManifest {
    std::string version{ionize::version};
    std::string config_hash;
    json config;
    double drive_freq{0.0};  // resolved ω_d/2π
    fs::path root;           // directory holding manifest.json
    std::vector<SweepOutput> sweep_outputs;
    std::vector<RunRecord> runs;

    fs::path file(const std::string& relative) const { return root / relative; }
    const SweepOutput* sweep_output(const std::string& name) const {
        for (const auto& o : sweep_outputs) {
            if (o.name == name && o.status == "completed") return &o;
        }
        return nullptr;
    }
};

using LogFn = std::function<void(const std::string&)>;

// ---- static branch analysis ----

struct BranchAnalysis {
    std::vector<Branch> branches;
    ResonanceReport report;
    std::vector<BranchFrequencyCurve> curves;
};

inline BranchAnalysis analyze_branches(const SystemParams& system, const BranchSettings& b) {
    SystemParams p = system;
    p.dim_r = b.dim_r;
    p.max_dim = std::max(p.max_dim, p.dim());
    const auto s = diagonalize_transmon(p.transmon, p.dim_t);
    const auto d = dressed_spectrum(p, s);
    const LadderOverlaps table(d);
    BranchAnalysis out;
    out.branches = identify_branches(d, table, b.count, b.n_max);
    out.report = cross_branch_overlaps(table, out.branches, b.threshold);
    for (const auto& br : out.branches) out.curves.push_back(smooth_frequency_curve(br, b.window));
    return out;
}

// Mean of the smoothed pulled frequencies ω_0(0) and ω_1(0).
inline double mean_pulled_frequency(const SystemParams& system, const BranchSettings& b) {
    BranchSettings small = b;
    small.count = 2;
    small.n_max = std::max(small.window, 8);
    small.dim_r = std::min(b.dim_r, std::max(40, small.n_max + 24));
    const auto a = analyze_branches(system, small);
    return 0.5 * (a.curves[0](0.0) + a.curves[1](0.0));
}

inline void resolve_drive_frequency(ExperimentConfig& c) {
    if (c.drive_mode == DriveFrequencyMode::MeanPulled) {
        c.system.drive_freq = mean_pulled_frequency(c.system, c.branches);
    }
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline void write_branches_csv(const fs::path& path, const std::vector<Branch>& branches) {
    std::string text = "branch,n,eigenstate_index,energy_GHz,C,mean_transmon_population\n";
    for (const auto& b : branches) {
        for (std::size_t n = 0; n < b.length(); ++n) {
            // C is the overlap that selected this state (seed overlap at n = 0).
            text += std::to_string(b.label) + "," + std::to_string(n) + "," + std::to_string(b.state_indices[n]) + "," +
                    format_number(b.energies[n]) + "," + format_number(b.selection_overlap(n)) + "," +
                    format_number(b.mean_transmon_population[n]) + "\n";
        }
    }
    write_text(path, text);
}

inline void write_resonances_csv(const fs::path& path, const ResonanceReport& report) {
    std::string text = "branch_a,branch_b,n,overlap\n";
    for (const auto& e : report.entries) {
        text += std::to_string(e.branch_a) + "," + std::to_string(e.branch_b) + "," + std::to_string(e.n) + "," +
                format_number(e.overlap) + "\n";
    }
    write_text(path, text);
}

// ---- semiclassical outputs ----

struct SemiclassicalOutputs {
    bool clamped{false};  // some trajectory left a curve and was clamped
};

inline double semiclassical_end(const ExperimentConfig& c) {
    return c.semiclassical.t_end > 0.0 ? c.semiclassical.t_end : c.t_end;
}

inline double semiclassical_step(const ExperimentConfig& c, const BranchAnalysis& a, const SystemParams& p) {
    if (c.semiclassical.dt > 0.0) return c.semiclassical.dt;
    double dt = 0.05;
    for (const auto& curve : a.curves) dt = std::min(dt, max_stable_step(curve, p));
    return dt;
}

inline std::vector<int> semiclassical_labels(const ExperimentConfig& c, const BranchAnalysis& a) {
    std::set<int> labels{0, 1};
    for (int i : c.initial_states) labels.insert(i);
    std::vector<int> out;
    for (int i : labels) {
        if (i < static_cast<int>(a.curves.size())) out.push_back(i);
    }
    return out;
}

inline SemiclassicalOutputs write_semiclassical_csv(const fs::path& path, const ExperimentConfig& c,
                                                    const BranchAnalysis& a) {
    const auto times = linspace_grid(0.0, semiclassical_end(c), c.semiclassical.time_points);
    SemiclassicalOutputs res;
    EomOptions opts;
    opts.range_policy = RangePolicy::ClampAndFlag;
    std::string text = "drive_GHz,branch,t_ns,re_alpha,im_alpha,n_photons\n";
    for (double amp : c.amplitudes) {
        SystemParams p = c.system;
        p.drive_amp = amp;
        const double dt = semiclassical_step(c, a, p);
        for (int label : semiclassical_labels(c, a)) {
            const auto& curve = a.curves[static_cast<std::size_t>(label)];
            cplx alpha(0.0, 0.0);
            double t = 0.0;
            for (double target : times) {
                if (target > t) {
                    const auto tr = integrate_branch_eom(curve, p, alpha, target - t, dt, opts, t);
                    alpha = tr.final_alpha();
                    res.clamped = res.clamped || tr.clamped;
                    t = target;
                }
                text += format_number(amp) + "," + std::to_string(label) + "," + format_number(target) + "," +
                        format_number(alpha.real()) + "," + format_number(alpha.imag()) + "," +
                        format_number(std::norm(alpha)) + "\n";
            }
        }
    }
    write_text(path, text);
    return res;
}

inline PopulationDifference compute_delta_nr(const ExperimentConfig& c, const BranchAnalysis& a) {
    const auto times = linspace_grid(0.0, semiclassical_end(c), c.semiclassical.time_points);
    EomOptions opts;
    opts.range_policy = RangePolicy::ClampAndFlag;
    double dt = 0.05;
    for (double amp : c.amplitudes) {
        SystemParams p = c.system;
        p.drive_amp = amp;
        dt = std::min(dt, semiclassical_step(c, a, p));
    }
    return population_difference(c.system, a.curves.at(0), a.curves.at(1), times, c.amplitudes, dt, opts);
}

inline void write_delta_nr_csv(const fs::path& path, const PopulationDifference& pd) {
    std::string text = "drive_GHz,t_ns,delta_nr\n";
    for (std::size_t r = 0; r < pd.amplitudes.size(); ++r) {
        for (std::size_t k = 0; k < pd.times.size(); ++k) {
            text += format_number(pd.amplitudes[r]) + "," + format_number(pd.times[k]) + "," +
                    format_number(pd.delta(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k))) + "\n";
        }
    }
    write_text(path, text);
}

// ---- master-equation runs ----

inline std::string timeseries_csv(const TimeSeries& ts, int dim_t) {
    std::string text = "t_ns,N_r,N_t,purity,trace_dev,dim_r";
    for (int i = 0; i < dim_t; ++i) text += ",N_" + std::to_string(i);
    text += "\n";
    for (const auto& r : ts.records) {
        text += format_number(r.time) + "," + format_number(r.n_r) + "," + format_number(r.n_t) + "," +
                format_number(r.purity) + "," + format_number(r.trace_deviation) + "," + std::to_string(r.dim_r);
        for (double v : r.levels) text += "," + format_number(v);
        text += "\n";
    }
    return text;
}

inline std::string wigner_csv(const WignerGrid& g) {
    std::string text = "re_beta,im_beta,W\n";
    for (std::size_t y = 0; y < g.im.size(); ++y) {
        for (std::size_t x = 0; x < g.re.size(); ++x) {
            text += format_number(g.re[x]) + "," + format_number(g.im[y]) + "," +
                    format_number(g.values(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y))) + "\n";
        }
    }
    return text;
}

inline json run_meta(const ExperimentConfig& c, const std::string& hash, const RunRecord& run, const TimeSeries& ts) {
    const auto& s = c.system;
    json meta;
    meta["version"] = ionize::version;
    meta["config_hash"] = hash;
    meta["index"] = run.index;
    meta["drive_amp"] = run.amplitude;
    meta["initial_state"] = run.initial_state;
    meta["t_end"] = c.t_end;
    meta["system"] = {{"e_c", s.transmon.e_c},
                      {"e_j", s.transmon.e_j},
                      {"charge_cutoff", s.transmon.cutoff_for(s.dim_t)},
                      {"omega_r", s.omega_r},
                      {"g", s.g},
                      {"kappa", s.kappa},
                      {"drive_amp", run.amplitude},
                      {"drive_freq", s.drive_freq},
                      {"dim_t", s.dim_t},
                      {"dim_r", s.dim_r},
                      {"max_dim", s.max_dim}};
    const auto& p = c.propagator;
    meta["propagator"] = {{"taylor_order", p.taylor_order},
                          {"steps_per_drive_period", p.steps_per_drive_period},
                          {"truncation_threshold", p.truncation_threshold},
                          {"max_dim_r", p.max_dim_r},
                          {"record_every", p.record_every},
                          {"magnus_commutator", p.magnus_commutator},
                          {"blowup_norm", p.blowup_norm}};
    meta["status"] = ts.complete() ? "completed" : "failed";
    meta["error"] = ts.error;
    meta["records"] = ts.records.size();
    meta["resizes"] = ts.resizes;
    meta["final_dim_r"] = ts.records.empty() ? s.dim_r : ts.records.back().dim_r;
    return meta;
}

struct SharedRunInputs {
    TransmonSpectrum transmon;
    DressedSpectrum dressed;
};

inline SharedRunInputs prepare_run_inputs(const ExperimentConfig& c) {
    SharedRunInputs in;
    in.transmon = diagonalize_transmon(c.system.transmon, c.system.dim_t);
    in.dressed = dressed_spectrum(c.system, in.transmon);
    return in;
}

inline void execute_run(const ExperimentConfig& c, const std::string& hash, const SharedRunInputs& in,
                        const fs::path& root, RunRecord& run) {
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = root / run.directory;
    try {
        fs::create_directories(dir);
        SystemParams p = c.system;
        p.drive_amp = run.amplitude;
        const auto rho0 = initial_state(in.dressed, run.initial_state, p.dim_r);
        EvolveOptions opts;
        opts.wigner_every = c.outputs.wigner_every;
        opts.wigner_grid = c.outputs.wigner_grid;
        const auto ts = evolve(p, in.transmon, c.propagator, rho0, c.t_end, opts);
        write_text(dir / "meta.json", run_meta(c, hash, run, ts).dump(2) + "\n");
        run.outputs.push_back(run.directory + "/meta.json");
        if (c.outputs.timeseries) {
            write_text(dir / "timeseries.csv", timeseries_csv(ts, p.dim_t));
            run.outputs.push_back(run.directory + "/timeseries.csv");
        }
        for (const auto& w : ts.wigner) {
            const std::string name = "wigner_" + std::to_string(w.record) + ".csv";
            write_text(dir / name, wigner_csv(w.grid));
            run.outputs.push_back(run.directory + "/" + name);
        }
        run.status = ts.complete() ? "completed" : "failed";
        run.error = ts.error;
    } catch (const std::exception& e) {
        run.status = "failed";
        run.error = e.what();
    }
    run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline std::vector<RunRecord> plan_runs(const ExperimentConfig& c) {
    std::vector<RunRecord> runs;
    for (double amp : c.amplitudes) {
        for (int state : c.initial_states) {
            RunRecord r;
            r.index = runs.size();
            r.amplitude = amp;
            r.initial_state = state;
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", r.index);
            r.directory = name;
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

// ---- manifest ----

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["version"] = m.version;
    j["config_hash"] = m.config_hash;
    j["drive_freq"] = m.drive_freq;
    j["config"] = m.config;
    json outs = json::array();
    for (const auto& o : m.sweep_outputs) {
        outs.push_back({{"name", o.name}, {"path", o.path}, {"status", o.status}, {"error", o.error}});
    }
    j["sweep_outputs"] = outs;
    json runs = json::array();
    for (const auto& r : m.runs) {
        runs.push_back({{"index", r.index},
                        {"drive_amp", r.amplitude},
                        {"initial_state", r.initial_state},
                        {"directory", r.directory},
                        {"outputs", r.outputs},
                        {"status", r.status},
                        {"error", r.error},
                        {"wall_time_s", r.wall_time_s}});
    }
    j["runs"] = runs;
    return j;
}

inline RunManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingRunError("manifest '" + path.string() + "' not found");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    RunManifest m;
    try {
        m.root = path.parent_path();
        m.version = j.at("version").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.drive_freq = j.at("drive_freq").get<double>();
        m.config = j.at("config");
        for (const auto& o : j.at("sweep_outputs")) {
            m.sweep_outputs.push_back({o.at("name").get<std::string>(), o.at("path").get<std::string>(),
                                       o.at("status").get<std::string>(), o.at("error").get<std::string>()});
        }
        for (const auto& r : j.at("runs")) {
            RunRecord rec;
            rec.index = r.at("index").get<std::size_t>();
            rec.amplitude = r.at("drive_amp").get<double>();
            rec.initial_state = r.at("initial_state").get<int>();
            rec.directory = r.at("directory").get<std::string>();
            rec.outputs = r.at("outputs").get<std::vector<std::string>>();
            rec.status = r.at("status").get<std::string>();
            rec.error = r.at("error").get<std::string>();
            rec.wall_time_s = r.at("wall_time_s").get<double>();
            m.runs.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
    return m;
}

// ---- entry points ----

template <typename Body>
inline SweepOutput guarded_output(const std::string& name, const LogFn& log, Body&& body) {
    SweepOutput o{name, name, "completed", {}};
    try {
        body();
    } catch (const std::exception& e) {
        o.path.clear();
        o.status = "failed";
        o.error = e.what();
        if (log) log(name + " failed: " + e.what());
    }
    return o;
}

// Branch tables for the config's system; writes branches.csv and resonances.csv.
inline BranchAnalysis run_branches(const ExperimentConfig& c, const fs::path& root) {
    fs::create_directories(root);
    auto a = analyze_branches(c.system, c.branches);
    write_branches_csv(root / "branches.csv", a.branches);
    write_resonances_csv(root / "resonances.csv", a.report);
    return a;
}

inline RunManifest run_sweep(ExperimentConfig c, const LogFn& log = {}) {
    c.validate();
    resolve_drive_frequency(c);
    const fs::path root = c.output_dir;
    fs::create_directories(root);

    RunManifest m;
    m.root = root;
    m.config = config_to_json(c);
    m.config_hash = fnv1a_hex(m.config.dump());
    m.drive_freq = c.system.drive_freq;

    const bool need_branches = c.outputs.branches || c.outputs.semiclassical || c.outputs.delta_nr;
    if (need_branches) {
        if (log) log("branch analysis (dim_r " + std::to_string(c.branches.dim_r) + ")");
        std::optional<BranchAnalysis> analysis;
        const auto status = guarded_output("branches.csv", log, [&] { analysis = run_branches(c, root); });
        if (c.outputs.branches) {
            m.sweep_outputs.push_back(status);
            auto res = status;
            res.name = "resonances.csv";
            if (!res.path.empty()) res.path = res.name;
            m.sweep_outputs.push_back(res);
        }
        if (c.outputs.semiclassical) {
            m.sweep_outputs.push_back(guarded_output("semiclassical.csv", log, [&] {
                if (!analysis) throw Error("branch analysis unavailable: " + status.error);
                const auto res = write_semiclassical_csv(root / "semiclassical.csv", c, *analysis);
                if (res.clamped && log) log("semiclassical: some trajectories were clamped at the curve end");
            }));
        }
        if (c.outputs.delta_nr) {
            m.sweep_outputs.push_back(guarded_output("delta_nr.csv", log, [&] {
                if (!analysis) throw Error("branch analysis unavailable: " + status.error);
                write_delta_nr_csv(root / "delta_nr.csv", compute_delta_nr(c, *analysis));
            }));
        }
    }

    m.runs = plan_runs(c);
    if (c.outputs.timeseries || c.outputs.wigner_every > 0) {
        const auto inputs = prepare_run_inputs(c);
        const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(c.workers), m.runs.size());
        std::mutex log_mutex;
        auto worker = [&](std::size_t w) {
            for (std::size_t k = w; k < m.runs.size(); k += workers) {
                auto& run = m.runs[k];
                execute_run(c, m.config_hash, inputs, root, run);
                if (log) {
                    std::lock_guard<std::mutex> lock(log_mutex);
                    log(run.directory + " drive " + format_number(run.amplitude) + " GHz, state " +
                        std::to_string(run.initial_state) + ": " + run.status +
                        (run.error.empty() ? "" : " (" + run.error + ")"));
                }
            }
        };
        if (workers <= 1) {
            worker(0);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
            for (auto& t : pool) t.join();
        }
    }
    write_text(root / "manifest.json", manifest_to_json(m).dump(2) + "\n");
    return m;
}

inline RunManifest run_preset(const std::string& name, const LogFn& log = {}) { return run_sweep(preset_config(name), log); }

}  // namespace ionize
