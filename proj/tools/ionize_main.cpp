// ionize — command-line front end for sweeps, branch tables and figure export

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ionize/config.hpp"
#include "ionize/export.hpp"
#include "ionize/sweep.hpp"

namespace {

struct Overrides {
    std::optional<int> workers;
    std::optional<std::string> out;
    std::optional<std::size_t> dim_cap;
    bool magnus{false};

    void apply(ionize::ExperimentConfig& c) const {
        if (workers) c.workers = *workers;
        if (out) c.output_dir = *out;
        if (dim_cap) {
            c.system.max_dim = *dim_cap;
            c.propagator.max_dim_r = static_cast<int>(*dim_cap / static_cast<std::size_t>(c.system.dim_t));
        }
        if (magnus) c.propagator.magnus_commutator = true;
        c.validate();
    }
};

void add_overrides(CLI::App* app, Overrides& o) {
    app->add_option("--workers", o.workers, "Parallel runs")->check(CLI::PositiveNumber);
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--dim-cap", o.dim_cap, "Cap on dim_t*dim_r")->check(CLI::PositiveNumber);
    app->add_flag("--magnus-commutator", o.magnus, "Add the second-order Magnus commutator term");
}

void log_line(const std::string& s) { std::cerr << s << std::endl; }

int report(const ionize::RunManifest& m) {
    int failed = 0;
    for (const auto& r : m.runs) failed += r.status == "completed" ? 0 : 1;
    for (const auto& o : m.sweep_outputs) failed += o.status == "completed" ? 0 : 1;
    std::cout << (m.root / "manifest.json").string() << "\n";
    if (failed) std::cerr << failed << " output(s) failed; see manifest.json\n";
    return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drive-induced transmon ionization: sweeps, branch analysis and export"};
    app.require_subcommand(1);

    std::string config_path, preset_name, manifest_path, figure, export_out;
    Overrides sim_o, preset_o, branch_o, sc_o;

    auto* simulate = app.add_subcommand("simulate", "Run the sweep described by a JSON config");
    simulate->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    add_overrides(simulate, sim_o);

    auto* preset = app.add_subcommand("preset", "Run a named preset");
    preset->add_option("name", preset_name, "Preset name")->required();
    add_overrides(preset, preset_o);

    auto* branches = app.add_subcommand("branches", "Write branches.csv and resonances.csv only");
    branches->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    add_overrides(branches, branch_o);

    auto* semi = app.add_subcommand("semiclassical", "Write the semiclassical tables only");
    semi->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);
    add_overrides(semi, sc_o);

    auto* exp = app.add_subcommand("export", "Write plot-ready tables for one figure");
    exp->add_option("manifest", manifest_path, "manifest.json of a finished sweep")->required();
    exp->add_option("figure", figure, "Figure id")->required()->check(CLI::IsMember(ionize::figure_names()));
    exp->add_option("--out", export_out, "Output directory (default: <sweep>/figures)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) {
            auto c = ionize::load_config(config_path);
            sim_o.apply(c);
            return report(ionize::run_sweep(c, log_line));
        }
        if (*preset) {
            auto c = ionize::preset_config(preset_name);
            preset_o.apply(c);
            return report(ionize::run_sweep(c, log_line));
        }
        if (*branches) {
            auto c = ionize::load_config(config_path);
            branch_o.apply(c);
            const auto a = ionize::run_branches(c, c.output_dir);
            for (const auto& e : a.report.entries) {
                std::printf("%d-%d n=%d overlap=%.6g\n", e.branch_a, e.branch_b, e.n, e.overlap);
            }
            return 0;
        }
        if (*semi) {
            auto c = ionize::load_config(config_path);
            sc_o.apply(c);
            ionize::resolve_drive_frequency(c);
            const ionize::fs::path root = c.output_dir;
            ionize::fs::create_directories(root);
            const auto a = ionize::analyze_branches(c.system, c.branches);
            const auto res = ionize::write_semiclassical_csv(root / "semiclassical.csv", c, a);
            ionize::write_delta_nr_csv(root / "delta_nr.csv", ionize::compute_delta_nr(c, a));
            if (res.clamped) std::cerr << "some trajectories reached the end of a branch curve and were clamped\n";
            std::cout << (root / "semiclassical.csv").string() << "\n" << (root / "delta_nr.csv").string() << "\n";
            return 0;
        }
        if (*exp) {
            const auto m = ionize::read_manifest(manifest_path);
            const ionize::fs::path out = export_out.empty() ? m.root / "figures" : ionize::fs::path(export_out);
            for (const auto& f : ionize::export_figure_data(m, figure, out)) std::cout << (out / f).string() << "\n";
            return 0;
        }
    } catch (const ionize::ValidationError& e) {
        std::cerr << "invalid config (" << e.field << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
