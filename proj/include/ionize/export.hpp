// export.hpp — plot-ready tables regenerated from a finished sweep
//
// Every table is rebuilt from files referenced by manifest.json; nothing is
// recomputed except the smoothed branch curves, which come from branches.csv.

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ionize/branch_ladders.hpp"
#include "ionize/errors.hpp"
#include "ionize/sweep.hpp"

namespace ionize {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < header.size(); ++k) {
            if (header[k] == name) return k;
        }
        throw ParseError("csv: no column '" + name + "'");
    }
};

inline CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingRunError("missing file '" + path.string() + "'");
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(in, line)) throw ParseError("csv: empty file '" + path.string() + "'");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) throw ParseError("csv: ragged row in '" + path.string() + "'");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw ParseError("csv: non-numeric cell '" + c + "' in '" + path.string() + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"fig2", "fig3a", "fig3b", "fig4", "fig5", "fig6a", "fig7", "fig8"};
    return names;
}

namespace detail {

inline std::vector<const RunRecord*> runs_with(const RunManifest& m, const std::string& file) {
    std::vector<const RunRecord*> out;
    for (const auto& r : m.runs) {
        for (const auto& o : r.outputs) {
            if (o == r.directory + "/" + file) {
                out.push_back(&r);
                break;
            }
        }
    }
    return out;
}

inline const SweepOutput& require_output(const RunManifest& m, const std::string& name, const std::string& fig) {
    const auto* o = m.sweep_output(name);
    if (!o) throw MissingRunError(fig + ": manifest has no completed " + name);
    return *o;
}

inline std::vector<const RunRecord*> require_timeseries(const RunManifest& m, const std::string& fig) {
    auto runs = runs_with(m, "timeseries.csv");
    if (runs.empty()) throw MissingRunError(fig + ": manifest has no run with a time series");
    return runs;
}

inline std::string run_prefix(const RunRecord& r) {
    return format_number(r.amplitude) + "," + std::to_string(r.initial_state) + ",";
}

// Populations and purity against time.
inline std::vector<std::string> export_populations(const RunManifest& m, const fs::path& out, const std::string& fig) {
    std::string pops = "drive_GHz,initial_state,t_ns,level,population\n";
    std::string pur = "drive_GHz,initial_state,t_ns,N_r,N_t,purity\n";
    for (const auto* r : require_timeseries(m, fig)) {
        const auto t = read_csv(m.file(r->directory + "/timeseries.csv"));
        const auto ct = t.column("t_ns");
        const auto first = t.column("N_0");
        for (const auto& row : t.rows) {
            for (std::size_t k = first; k < row.size(); ++k) {
                pops += run_prefix(*r) + format_number(row[ct]) + "," + std::to_string(k - first) + "," +
                        format_number(row[k]) + "\n";
            }
            pur += run_prefix(*r) + format_number(row[ct]) + "," + format_number(row[t.column("N_r")]) + "," +
                   format_number(row[t.column("N_t")]) + "," + format_number(row[t.column("purity")]) + "\n";
        }
    }
    write_text(out / (fig + "_populations.csv"), pops);
    write_text(out / (fig + "_purity.csv"), pur);
    return {fig + "_populations.csv", fig + "_purity.csv"};
}

// Parametric (N_r, N_t) trajectories.
inline std::vector<std::string> export_parametric(const RunManifest& m, const fs::path& out, const std::string& fig) {
    std::string text = "drive_GHz,initial_state,t_ns,N_r,N_t\n";
    for (const auto* r : require_timeseries(m, fig)) {
        const auto t = read_csv(m.file(r->directory + "/timeseries.csv"));
        for (const auto& row : t.rows) {
            text += run_prefix(*r) + format_number(row[t.column("t_ns")]) + "," +
                    format_number(row[t.column("N_r")]) + "," + format_number(row[t.column("N_t")]) + "\n";
        }
    }
    write_text(out / (fig + ".csv"), text);
    return {fig + ".csv"};
}

inline std::vector<std::string> export_branch_populations(const RunManifest& m, const fs::path& out) {
    const auto b = read_csv(m.file(require_output(m, "branches.csv", "fig3b").path));
    const auto r = read_csv(m.file(require_output(m, "resonances.csv", "fig3b").path));
    std::string text = "branch,n,mean_transmon_population\n";
    for (const auto& row : b.rows) {
        text += std::to_string(static_cast<int>(row[b.column("branch")])) + "," +
                std::to_string(static_cast<int>(row[b.column("n")])) + "," +
                format_number(row[b.column("mean_transmon_population")]) + "\n";
    }
    std::string res = "branch_a,branch_b,n,overlap\n";
    for (const auto& row : r.rows) {
        res += std::to_string(static_cast<int>(row[0])) + "," + std::to_string(static_cast<int>(row[1])) + "," +
               std::to_string(static_cast<int>(row[2])) + "," + format_number(row[3]) + "\n";
    }
    write_text(out / "fig3b_branches.csv", text);
    write_text(out / "fig3b_resonances.csv", res);
    return {"fig3b_branches.csv", "fig3b_resonances.csv"};
}

inline std::vector<std::string> export_wigner(const RunManifest& m, const fs::path& out) {
    const double period = 1.0 / m.drive_freq;
    const int record_every = m.config.at("propagator").at("record_every").get<int>();
    std::string text = "drive_GHz,initial_state,t_ns,re_beta,im_beta,log10_abs_W\n";
    bool any = false;
    for (const auto& r : m.runs) {
        for (const auto& o : r.outputs) {
            const auto name = fs::path(o).filename().string();
            if (name.rfind("wigner_", 0) != 0) continue;
            any = true;
            const int record = std::stoi(name.substr(7, name.size() - 11));
            const double t = record * record_every * period;
            const auto w = read_csv(m.file(o));
            for (const auto& row : w.rows) {
                const double v = std::max(std::abs(row[2]), 1e-300);
                text += run_prefix(r) + format_number(t) + "," + format_number(row[0]) + "," + format_number(row[1]) +
                        "," + format_number(std::log10(v)) + "\n";
            }
        }
    }
    if (!any) throw MissingRunError("fig4: manifest has no Wigner snapshots");
    write_text(out / "fig4.csv", text);
    return {"fig4.csv"};
}

inline std::vector<std::string> export_frequencies(const RunManifest& m, const fs::path& out) {
    const auto b = read_csv(m.file(require_output(m, "branches.csv", "fig5").path));
    const int window = m.config.at("branches").at("window").get<int>();
    const double omega_r = m.config.at("system").at("omega_r").get<double>();
    std::map<int, Branch> branches;
    for (const auto& row : b.rows) {
        auto& br = branches[static_cast<int>(row[b.column("branch")])];
        br.state_indices.push_back(static_cast<Eigen::Index>(row[b.column("eigenstate_index")]));
        br.energies.push_back(row[b.column("energy_GHz")]);
    }
    std::string text = "series,branch,n,omega_GHz\n";
    int n_top = 0;
    for (auto& [label, br] : branches) {
        br.label = label;
        const auto curve = smooth_frequency_curve(br, window);
        n_top = std::max(n_top, static_cast<int>(curve.max_photons()));
        for (std::size_t n = 0; n < curve.raw().size(); ++n) {
            text += "raw," + std::to_string(label) + "," + std::to_string(n) + "," + format_number(curve.raw()[n]) + "\n";
        }
        for (std::size_t n = 0; n < curve.smoothed().size(); ++n) {
            text += "smoothed," + std::to_string(label) + "," + std::to_string(n) + "," +
                    format_number(curve.smoothed()[n]) + "\n";
        }
    }
    text += "reference,-1,0," + format_number(omega_r) + "\n";
    text += "reference,-1," + std::to_string(n_top) + "," + format_number(omega_r) + "\n";
    write_text(out / "fig5.csv", text);
    return {"fig5.csv"};
}

// Semiclassical ΔN_r beside the master-equation difference N_r(1) − N_r(0).
inline std::vector<std::string> export_delta_nr(const RunManifest& m, const fs::path& out) {
    const auto sc = read_csv(m.file(require_output(m, "delta_nr.csv", "fig7").path));
    std::string text = "source,drive_GHz,t_ns,delta_nr\n";
    for (const auto& row : sc.rows) {
        text += "semiclassical," + format_number(row[0]) + "," + format_number(row[1]) + "," + format_number(row[2]) + "\n";
    }
    std::map<double, std::map<int, const RunRecord*>> by_amp;
    for (const auto* r : runs_with(m, "timeseries.csv")) by_amp[r->amplitude][r->initial_state] = r;
    bool paired = false;
    for (const auto& [amp, states] : by_amp) {
        if (!states.count(0) || !states.count(1)) continue;
        paired = true;
        const auto g = read_csv(m.file(states.at(0)->directory + "/timeseries.csv"));
        const auto e = read_csv(m.file(states.at(1)->directory + "/timeseries.csv"));
        const std::size_t rows = std::min(g.rows.size(), e.rows.size());
        for (std::size_t k = 0; k < rows; ++k) {
            const double dn = e.rows[k][e.column("N_r")] - g.rows[k][g.column("N_r")];
            text += "master_equation," + format_number(amp) + "," + format_number(g.rows[k][g.column("t_ns")]) + "," +
                    format_number(dn) + "\n";
        }
    }
    if (!paired) throw MissingRunError("fig7: no drive amplitude has completed runs for both states 0 and 1");
    write_text(out / "fig7.csv", text);
    return {"fig7.csv"};
}

}  // namespace detail

// Writes the tables for one figure into `out` and returns their file names.
inline std::vector<std::string> export_figure_data(const RunManifest& m, const std::string& figure, const fs::path& out) {
    fs::create_directories(out);
    if (figure == "fig2") return detail::export_populations(m, out, figure);
    if (figure == "fig3a" || figure == "fig6a" || figure == "fig8") return detail::export_parametric(m, out, figure);
    if (figure == "fig3b") return detail::export_branch_populations(m, out);
    if (figure == "fig4") return detail::export_wigner(m, out);
    if (figure == "fig5") return detail::export_frequencies(m, out);
    if (figure == "fig7") return detail::export_delta_nr(m, out);
    throw ValidationError("figure", "unknown figure '" + figure + "'");
}

}  // namespace ionize
