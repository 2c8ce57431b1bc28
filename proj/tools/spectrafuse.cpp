#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spectrafuse/core.hpp"
#include "spectrafuse/experiment.hpp"
#include "spectrafuse/plots.hpp"
#include "spectrafuse/synth.hpp"

namespace fs = std::filesystem;
using namespace spectrafuse;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::optional<double> threshold;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config, "JSON config file");
    if (config_required) c->required();
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "override the seed");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--threshold", f.threshold, "decision threshold (default 0.5)")->check(CLI::Range(0.0, 1.0));
}

experiment::ExperimentConfig load_config(const CommonFlags& f) {
    auto cfg = experiment::ExperimentConfig::load(f.config);
    if (!f.out.empty()) cfg.output = f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.threshold) cfg.threshold = *f.threshold;
    cfg.validate();
    return cfg;
}

int cmd_run(const CommonFlags& f) {
    const auto cfg = load_config(f);
    const auto outcomes = experiment::run_experiment(cfg, f.jobs);
    ordered_json cells = ordered_json::array();
    bool ok = true;
    for (const auto& o : outcomes) {
        ordered_json c = {{"cell", o.cell.name()}, {"dir", o.dir.string()}, {"ok", o.ok}};
        if (o.ok) {
            c["auc_mean"] = o.metrics->auc.mean;
            c["auc_std"] = o.metrics->auc.std;
            c["n"] = o.metrics->n;
        } else {
            c["error"] = o.error;
            ok = false;
        }
        cells.push_back(c);
    }
    const ordered_json doc = {{"status", ok ? "ok" : "error"}, {"command", "run"}, {"cells", cells}};
    std::cout << doc.dump(2) << '\n';
    return ok ? 0 : 1;
}

int cmd_grid_search(const CommonFlags& f) {
    const auto cfg = load_config(f);
    const fs::path out = f.out.empty() ? cfg.output : fs::path(f.out);
    fs::path cache = out / "cache";
    if (const char* env = std::getenv("SPECTRAFUSE_CACHE"); env && *env) cache = env;
    const auto res = experiment::run_grid_search(cfg, load_dataset(cfg.dataset), out, cache, f.jobs);
    const ordered_json doc = {{"status", "ok"},
                              {"command", "grid-search"},
                              {"candidates", res.grid.results.size()},
                              {"evaluated", res.grid.evaluated},
                              {"cache_hits", res.grid.cache_hits},
                              {"winner", res.winner.to_json()},
                              {"out", out.string()}};
    std::cout << doc.dump(2) << '\n';
    return 0;
}

int cmd_synth(const CommonFlags& f) {
    if (f.out.empty()) throw SpectraError("synth needs --out");
    synth::SynthSpec spec = synth::SynthSpec::table1();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw SpectraError("cannot open spec " + f.config);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw SpectraError("spec is not valid JSON: " + std::string(e.what()));
        }
        spec = synth::SynthSpec::from_json(j);
    }
    if (f.seed) spec.seed = *f.seed;
    spec.validate();
    const Dataset data = synth::generate(spec);
    save_dataset(data, f.out);
    experiment::write_text(fs::path(f.out) / "synth_spec.json", spec.to_json().dump(2) + "\n");
    ordered_json doc = experiment::describe_dataset(data);
    doc["command"] = "synth";
    doc["manifest"] = (fs::path(f.out) / "dataset.json").string();
    std::cout << doc.dump(2) << '\n';
    return 0;
}

int cmd_plots(const std::string& report_dir, const CommonFlags& f) {
    const fs::path out = f.out.empty() ? fs::path(report_dir) : fs::path(f.out);
    const auto files = plots::render_reports(report_dir, out);
    ordered_json list = ordered_json::array();
    for (const auto& p : files) list.push_back(p.string());
    std::cout << ordered_json{{"status", "ok"}, {"command", "plots"}, {"files", list}}.dump(2) << '\n';
    return 0;
}

int cmd_validate(const std::string& manifest, const CommonFlags& f) {
    fs::path path = manifest;
    if (path.empty()) {
        if (f.config.empty()) throw SpectraError("validate needs a dataset manifest or --config");
        path = experiment::ExperimentConfig::load(f.config).dataset;
    }
    ordered_json doc = experiment::validate_dataset(path);
    doc["command"] = "validate";
    std::cout << doc.dump(2) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectrafuse: multimodal spectroscopy fusion and evaluation"};
    app.require_subcommand(1);

    CommonFlags run_f, grid_f, synth_f, plots_f, validate_f;
    auto* run = app.add_subcommand("run", "cross-validate one cell or a suite of cells");
    add_common(run, run_f, true);
    auto* grid = app.add_subcommand("grid-search", "sweep all FTIR preprocessing pipelines");
    add_common(grid, grid_f, true);
    auto* syn = app.add_subcommand("synth", "write a synthetic dataset");
    add_common(syn, synth_f, false);
    auto* plot = app.add_subcommand("plots", "render SVG plots from report files");
    add_common(plot, plots_f, false);
    std::string report_dir;
    plot->add_option("report_dir", report_dir, "report directory")->required();
    auto* val = app.add_subcommand("validate", "schema-check a dataset");
    add_common(val, validate_f, false);
    std::string manifest;
    val->add_option("dataset", manifest, "dataset manifest (dataset.json)");

    CLI11_PARSE(app, argc, argv);

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*run) return cmd_run(run_f);
        if (*grid) return cmd_grid_search(grid_f);
        if (*syn) return cmd_synth(synth_f);
        if (*plot) return cmd_plots(report_dir, plots_f);
        if (*val) return cmd_validate(manifest, validate_f);
    } catch (const std::exception& e) {
        std::cout << experiment::error_json(command, e.what()).dump(2) << '\n';
        return 1;
    }
    return 1;
}
