#include "spectrafuse/experiment.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spectrafuse/fusion.hpp"
#include "spectrafuse/prepeem.hpp"
#include "spectrafuse/util.hpp"

namespace spectrafuse::experiment {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpectraError("cannot write " + path.string());
    out << text;
    if (!out) throw SpectraError("write failed for " + path.string());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

ordered_json error_json(std::string_view command, std::string_view message) {
    return {{"status", "error"}, {"command", command}, {"error", message}};
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    if (modalities.empty()) throw SpectraError("modality subset must not be empty");
    for (std::size_t i = 0; i < modalities.size(); ++i)
        for (std::size_t j = i + 1; j < modalities.size(); ++j)
            if (modalities[i] == modalities[j]) throw SpectraError("duplicate modality in subset");
    if (k < 2) throw SpectraError("cv.k must be >= 2");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw SpectraError("threshold must lie in [0, 1]");
    for (double f : learning_curve)
        if (!(f > 0.0 && f <= 1.0)) throw SpectraError("learning curve fractions must lie in (0, 1]");
    gbdt.validate();
}

ordered_json ExperimentConfig::to_json() const {
    ordered_json mods = ordered_json::array();
    for (Modality m : modalities) mods.push_back(std::string(to_string(m)));
    return {{"dataset", dataset.string()},
            {"scenario", std::string(to_string(scenario))},
            {"modalities", mods},
            {"suite", suite},
            {"ftir_pipeline", prep1d::to_json(ftir_pipeline)},
            {"gbdt", gbdt.to_json()},
            {"cv", {{"k", k}, {"seed", seed}}},
            {"threshold", threshold},
            {"output", output.string()},
            {"learning_curve", learning_curve},
            {"pca", pca}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw SpectraError("config must be a JSON object");
        auto resolve = [&](const std::string& p) {
            fs::path path(p);
            return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
        };
        if (j.contains("dataset")) c.dataset = resolve(j["dataset"].get<std::string>());
        if (j.contains("scenario")) c.scenario = parse_scenario(j["scenario"].get<std::string>());
        if (j.contains("modalities")) {
            c.modalities.clear();
            for (const auto& m : j["modalities"]) c.modalities.push_back(parse_modality(m.get<std::string>()));
        }
        c.suite = j.value("suite", false);
        if (j.contains("ftir_pipeline")) c.ftir_pipeline = prep1d::pipeline_from_json(j["ftir_pipeline"]);
        if (j.contains("gbdt")) c.gbdt = gbdt::GBDTParams::from_json(j["gbdt"]);
        if (j.contains("cv")) {
            c.k = j["cv"].value("k", c.k);
            c.seed = j["cv"].value("seed", c.seed);
        }
        c.threshold = j.value("threshold", c.threshold);
        if (j.contains("output")) c.output = resolve(j["output"].get<std::string>());
        c.learning_curve = j.value("learning_curve", c.learning_curve);
        c.pca = j.value("pca", false);
    } catch (const json::exception& e) {
        throw SpectraError(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SpectraError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SpectraError("config is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Cells

std::vector<std::vector<Modality>> seven_configurations() {
    using M = Modality;
    return {{M::FTIR},           {M::Raman},         {M::EEM},           {M::FTIR, M::Raman},
            {M::FTIR, M::EEM},   {M::Raman, M::EEM}, {M::FTIR, M::Raman, M::EEM}};
}

namespace {

std::vector<Modality> canonical(std::span<const Modality> subset) {
    std::vector<Modality> out(subset.begin(), subset.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string configuration_name(std::span<const Modality> modalities) {
    std::string out;
    for (Modality m : canonical(modalities)) {
        if (!out.empty()) out += '+';
        out += to_string(m);
    }
    return out;
}

std::string Cell::name() const { return std::string(to_string(scenario)) + "_" + configuration_name(modalities); }

std::vector<Cell> expand(const ExperimentConfig& cfg) {
    if (!cfg.suite) return {{cfg.scenario, canonical(cfg.modalities)}};
    std::vector<Cell> out;
    for (Scenario s : {Scenario::Breast, Scenario::Colon})
        for (auto& mods : seven_configurations()) out.push_back({s, mods});
    return out;
}

// ---------------------------------------------------------------------------
// Feature construction

namespace {

const SampleTable& table_of(const Dataset& data, Modality m) {
    const auto it = data.find(m);
    if (it == data.end() || it->second.records.empty())
        throw SpectraError("dataset has no " + std::string(to_string(m)) + " records");
    return it->second;
}

struct PatientFeatures {
    std::map<std::string, std::vector<double>> rows;
    std::map<std::string, Group> groups;
    std::vector<std::string> names;
};

PatientFeatures patient_features(const Dataset& data, Modality m, Scenario scenario,
                                 const prep1d::PipelineConfig& ftir, const prep1d::OperatorSettings& ops) {
    const SampleTable& table = table_of(data, m);
    PatientFeatures out;
    for (const auto& id : table.patients()) {
        const auto recs = table.records_of(id);
        const Group g = recs.front()->group;
        if (!in_scenario(g, scenario)) continue;
        std::vector<double> v;
        switch (m) {
            case Modality::FTIR: {
                std::vector<Spectrum1D> reps;
                for (const auto* r : recs) reps.push_back(r->spectrum());
                const auto vectors = prep1d::apply_pipeline(ftir, reps, ops);
                v = fusion::collapse_replicates_for_fusion(vectors);
                break;
            }
            case Modality::Raman:
                v = prep1d::raman_pipeline(recs.front()->spectrum(), ops);
                break;
            case Modality::EEM: {
                const auto& r = *recs.front();
                v = r.blank ? prepeem::eem_pipeline(r.eem(), *r.blank) : prepeem::eem_pipeline(r.eem());
                if (out.names.empty()) out.names = prepeem::feature_names(r.eem());
                break;
            }
        }
        out.rows.emplace(id, std::move(v));
        out.groups.emplace(id, g);
    }
    if (out.rows.empty())
        throw SpectraError("no " + std::string(to_string(m)) + " patients for scenario " +
                           std::string(to_string(scenario)));
    return out;
}

}  // namespace

eval::CvData patient_level_cvdata(const Dataset& data, Scenario scenario, std::span<const Modality> modalities,
                                  const prep1d::PipelineConfig& ftir, const prep1d::OperatorSettings& ops) {
    const auto subset = canonical(modalities);
    if (subset.empty()) throw SpectraError("modality subset must not be empty");
    std::map<Modality, PatientFeatures> features;
    std::map<Modality, std::vector<std::string>> available;
    for (Modality m : subset) {
        auto f = patient_features(data, m, scenario, ftir, ops);
        auto& ids = available[m];
        for (const auto& [id, _] : f.rows) ids.push_back(id);
        features.emplace(m, std::move(f));
    }
    const auto patients = fusion::align_patients(available, subset);

    eval::CvData out;
    for (const auto& id : patients) {
        const Group g = features.at(subset.front()).groups.at(id);
        for (Modality m : subset)
            if (features.at(m).groups.at(id) != g) throw SpectraError("patient " + id + " has conflicting groups");
        out.labels.push_back(label_of(g));
        out.groups.push_back(id);
    }
    for (Modality m : subset) {
        auto& f = features.at(m);
        std::vector<std::vector<double>> rows;
        rows.reserve(patients.size());
        for (const auto& id : patients) rows.push_back(std::move(f.rows.at(id)));
        out.blocks.push_back(fusion::make_block(m, rows, f.names));
    }
    return out;
}

eval::CvData build_cvdata(const Dataset& data, Scenario scenario, std::span<const Modality> modalities,
                          const prep1d::PipelineConfig& ftir, const prep1d::OperatorSettings& ops) {
    if (modalities.size() == 1 && modalities.front() == Modality::FTIR)
        return search::ftir_cvdata(search::ftir_cohort(table_of(data, Modality::FTIR), scenario), ftir, ops);
    return patient_level_cvdata(data, scenario, modalities, ftir, ops);
}

std::uint64_t dataset_hash(const Dataset& data) {
    std::uint64_t h = fnv1a("spectrafuse-dataset");
    for (const auto& [m, table] : data) {
        h = fnv1a(to_string(m), h);
        for (const auto& r : table.records) {
            h = fnv1a(r.patient_id, h);
            h = fnv1a(to_string(r.group), h);
            h = fnv1a(std::to_string(r.replicate), h);
            if (const auto* s = std::get_if<Spectrum1D>(&r.payload)) {
                h = fnv1a(s->axis.values(), h);
                h = fnv1a(s->intensity, h);
            } else {
                const auto& e = std::get<EEMatrix>(r.payload);
                h = fnv1a(e.ex_axis().values(), h);
                h = fnv1a(e.em_axis().values(), h);
                h = fnv1a(e.grid(), h);
            }
            if (r.blank) h = fnv1a(r.blank->grid(), h);
        }
    }
    return h;
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::string roc_csv(const eval::MetricsSummary& m) {
    std::string s = "fold,fpr,tpr\n";
    for (const auto& f : m.folds)
        for (const auto& p : f.roc)
            s += std::to_string(f.fold) + "," + format_double(p.fpr) + "," + format_double(p.tpr) + "\n";
    return s;
}

std::string learning_curve_csv(std::span<const eval::LearningCurveRow> rows) {
    std::string s = "fraction,mean_train_rows,auc_mean,auc_std\n";
    for (const auto& r : rows)
        s += format_double(r.fraction) + "," + format_double(r.mean_train_rows) + "," + format_double(r.auc.mean) +
             "," + format_double(r.auc.std) + "\n";
    return s;
}

void write_pca(const Dataset& data, const ExperimentConfig& cfg, const Cell& cell, const fs::path& dir) {
    for (Modality m : cell.modalities) {
        const Modality one[] = {m};
        const auto cv = patient_level_cvdata(data, cell.scenario, one, cfg.ftir_pipeline);
        const auto pca = eval::pca_project(cv.blocks.front().values, 2);
        const auto& table = table_of(data, m);
        std::string csv = "patient_id,group,pc1,pc2\n";
        for (std::size_t i = 0; i < cv.rows(); ++i) {
            const auto recs = table.records_of(cv.groups[i]);
            csv += cv.groups[i] + "," + std::string(to_string(recs.front()->group)) + "," +
                   format_double(pca.scores(static_cast<Eigen::Index>(i), 0)) + "," +
                   format_double(pca.scores(static_cast<Eigen::Index>(i), 1)) + "\n";
        }
        const std::string stem = "pca_" + std::string(to_string(m));
        write_text(dir / (stem + ".csv"), csv);
        const ordered_json meta = {{"modality", std::string(to_string(m))},
                                   {"scenario", std::string(to_string(cell.scenario))},
                                   {"n", cv.rows()},
                                   {"explained_variance_ratio", pca.explained_variance_ratio}};
        write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
    }
}

}  // namespace

CellOutcome run_cell(const Dataset& data, const ExperimentConfig& cfg, const Cell& cell, const fs::path& dir,
                     unsigned jobs) {
    CellOutcome out{cell, dir, false, {}, std::nullopt};
    try {
        fs::create_directories(dir);
        fs::remove(dir / "error.json");
        const auto cv = build_cvdata(data, cell.scenario, cell.modalities, cfg.ftir_pipeline);
        eval::CvOptions opts;
        opts.k = cfg.k;
        opts.seed = cfg.seed;
        opts.threshold = cfg.threshold;
        opts.jobs = jobs;
        const auto metrics = eval::cross_validate(cv, cfg.gbdt, opts);

        const bool ftir_only = cell.modalities.size() == 1 && cell.modalities.front() == Modality::FTIR;
        ordered_json doc = {{"scenario", std::string(to_string(cell.scenario))},
                            {"configuration", configuration_name(cell.modalities)},
                            {"level", ftir_only ? "replicate" : "patient"},
                            {"dataset_hash", hex64(dataset_hash(data))}};
        if (std::find(cell.modalities.begin(), cell.modalities.end(), Modality::FTIR) != cell.modalities.end())
            doc["ftir_pipeline"] = prep1d::to_json(cfg.ftir_pipeline);
        doc["gbdt"] = cfg.gbdt.to_json();
        const ordered_json summary = metrics.to_json();
        for (auto it = summary.begin(); it != summary.end(); ++it) doc[it.key()] = it.value();
        write_text(dir / "metrics.json", doc.dump(2) + "\n");
        write_text(dir / ("roc_" + cell.name() + ".csv"), roc_csv(metrics));

        if (!cfg.learning_curve.empty())
            write_text(dir / "learning_curve.csv",
                       learning_curve_csv(eval::learning_curve(cv, cfg.learning_curve, cfg.gbdt, opts)));
        if (cfg.pca) write_pca(data, cfg, cell, dir);

        out.metrics = metrics;
        out.ok = true;
    } catch (const std::exception& e) {
        out.error = e.what();
        try {
            auto err = error_json("run", e.what());
            err["cell"] = cell.name();
            write_text(dir / "error.json", err.dump(2) + "\n");
        } catch (const std::exception&) {
        }
    }
    return out;
}

std::vector<CellOutcome> run_experiment(const ExperimentConfig& cfg, const Dataset& data, unsigned jobs) {
    cfg.validate();
    const auto cells = expand(cfg);
    std::vector<CellOutcome> out(cells.size());
    if (cells.size() == 1) {
        out[0] = run_cell(data, cfg, cells[0], cfg.output / cells[0].name(), jobs);
        return out;
    }
    parallel_for(cells.size(), jobs,
                 [&](std::size_t i) { out[i] = run_cell(data, cfg, cells[i], cfg.output / cells[i].name(), 1); });
    return out;
}

std::vector<CellOutcome> run_experiment(const ExperimentConfig& cfg, unsigned jobs) {
    if (cfg.dataset.empty()) throw SpectraError("config has no dataset path");
    return run_experiment(cfg, load_dataset(cfg.dataset), jobs);
}

// ---------------------------------------------------------------------------
// Grid search

GridSearchOutcome run_grid_search(const ExperimentConfig& cfg, const Dataset& data, const fs::path& out,
                                  const fs::path& cache_dir, unsigned jobs, std::span<const std::size_t> indices) {
    cfg.validate();
    const auto& ftir = table_of(data, Modality::FTIR);
    const std::vector<search::FtirCohort> cohorts = {search::ftir_cohort(ftir, Scenario::Breast),
                                                     search::ftir_cohort(ftir, Scenario::Colon)};
    search::SearchSettings settings;
    settings.gbdt = cfg.gbdt;
    settings.cv.k = cfg.k;
    settings.cv.seed = cfg.seed;
    settings.cv.threshold = cfg.threshold;
    const search::ResultCache cache(cache_dir);

    GridSearchOutcome res{search::run_grid(cohorts, settings, &cache, jobs, indices), {}};
    res.winner = search::select_minmax(res.grid.results);

    fs::create_directories(out);
    search::write_grid_csv(out / "grid_results.csv", res.grid.results);
    write_text(out / "winner.json", res.winner.to_json().dump(2) + "\n");
    std::size_t failed = 0;
    for (const auto& r : res.grid.results) failed += r.failed;
    const ordered_json summary = {{"candidates", res.grid.results.size()},
                                  {"evaluated", res.grid.evaluated},
                                  {"cache_hits", res.grid.cache_hits},
                                  {"failed", failed},
                                  {"winner_index", res.winner.index},
                                  {"winner_worst_case", res.winner.worst_case},
                                  {"dataset_hash", hex64(dataset_hash(data))}};
    write_text(out / "summary.json", summary.dump(2) + "\n");
    return res;
}

// ---------------------------------------------------------------------------
// Validation

ordered_json describe_dataset(const Dataset& data) {
    ordered_json mods = ordered_json::object();
    std::map<Modality, std::vector<std::string>> available;
    std::map<std::string, Group> group_of;
    for (const auto& [m, table] : data) {
        validate_table(table);
        std::map<std::string, int> per_group;
        for (const auto& id : table.patients()) {
            const Group g = table.records_of(id).front()->group;
            per_group[std::string(to_string(g))] += 1;
            available[m].push_back(id);
            const auto [it, inserted] = group_of.emplace(id, g);
            if (!inserted && it->second != g) throw SpectraError("patient " + id + " has conflicting groups");
        }
        ordered_json entry = {{"records", table.records.size()}, {"patients", table.patients().size()}};
        entry["patients_per_group"] = per_group;
        if (!table.records.empty()) {
            const auto& r = table.records.front();
            if (const auto* s = std::get_if<Spectrum1D>(&r.payload)) {
                entry["axis"] = {{"points", s->axis.size()}, {"min", s->axis.front()}, {"max", s->axis.back()}};
            } else {
                const auto& e = std::get<EEMatrix>(r.payload);
                entry["grid"] = {{"ex", e.rows()}, {"em", e.cols()}};
                std::size_t blanks = 0;
                for (const auto& rec : table.records) blanks += rec.blank.has_value();
                entry["blanks"] = blanks;
            }
        }
        mods[std::string(to_string(m))] = entry;
    }
    ordered_json overlap = ordered_json::object();
    if (available.size() == 3) {
        for (Scenario s : {Scenario::Breast, Scenario::Colon}) {
            std::map<Modality, std::vector<std::string>> in;
            for (const auto& [m, ids] : available)
                for (const auto& id : ids)
                    if (in_scenario(group_of.at(id), s)) in[m].push_back(id);
            const std::vector<Modality> all(std::begin(kAllModalities), std::end(kAllModalities));
            std::size_t n = 0;
            try {
                n = fusion::align_patients(in, all).size();
            } catch (const SpectraError&) {
            }
            overlap[std::string(to_string(s))] = n;
        }
    }
    return {{"status", "ok"},
            {"dataset_hash", hex64(dataset_hash(data))},
            {"modalities", mods},
            {"trimodal_patients", overlap}};
}

ordered_json validate_dataset(const fs::path& manifest) { return describe_dataset(load_dataset(manifest)); }

}  // namespace spectrafuse::experiment
