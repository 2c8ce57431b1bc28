#include "spectrafuse/search.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "spectrafuse/util.hpp"

namespace spectrafuse::search {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t FtirCohort::hash() const {
    std::uint64_t h = fnv1a(to_string(scenario));
    for (std::size_t p = 0; p < patients.size(); ++p) {
        h = fnv1a(patients[p], h);
        h = fnv1a(labels[p] ? "1" : "0", h);
        for (const auto& s : replicates[p]) {
            h = fnv1a(s.axis.values(), h);
            h = fnv1a(s.intensity, h);
        }
    }
    return h;
}

FtirCohort ftir_cohort(const SampleTable& ftir, Scenario scenario) {
    if (ftir.modality != Modality::FTIR) throw SpectraError("FTIR cohort needs the FTIR table");
    FtirCohort cohort{scenario, {}, {}, {}};
    for (const auto& id : ftir.patients()) {
        const auto recs = ftir.records_of(id);
        if (!in_scenario(recs.front()->group, scenario)) continue;
        cohort.patients.push_back(id);
        cohort.labels.push_back(recs.front()->label());
        std::vector<Spectrum1D> reps;
        for (const auto* r : recs) reps.push_back(r->spectrum());
        cohort.replicates.push_back(std::move(reps));
    }
    if (cohort.patients.empty())
        throw SpectraError("no FTIR patients for scenario " + std::string(to_string(scenario)));
    return cohort;
}

eval::CvData ftir_cvdata(const FtirCohort& cohort, const PipelineConfig& cfg, const prep1d::OperatorSettings& ops) {
    std::vector<std::vector<double>> rows;
    eval::CvData data;
    for (std::size_t p = 0; p < cohort.patients.size(); ++p) {
        for (auto& v : prep1d::apply_pipeline(cfg, cohort.replicates[p], ops)) {
            rows.push_back(std::move(v));
            data.labels.push_back(cohort.labels[p]);
            data.groups.push_back(cohort.patients[p]);
        }
    }
    data.blocks.push_back(fusion::make_block(Modality::FTIR, rows));
    return data;
}

std::vector<PipelineConfig> enumerate_pipelines() {
    using namespace prep1d;
    std::vector<PipelineConfig> out;
    out.reserve(2880);
    for (auto rm : kReplicateModes)
        for (auto rg : kRegions)
            for (auto bl : kBaselines)
                for (auto sc : kScatters)
                    for (auto sm : kSmoothings)
                        for (auto dv : kDerivatives)
                            for (auto nm : kNormalizations) out.push_back({rm, rg, bl, sc, sm, dv, nm});
    return out;
}

// ---------------------------------------------------------------------------

double SearchResult::mean_auc() const {
    if (auc.empty()) return 0.0;
    double s = 0.0;
    for (double a : auc) s += a;
    return s / static_cast<double>(auc.size());
}

json SearchResult::to_json() const {
    json names = json::array();
    for (Scenario s : scenarios) names.push_back(std::string(to_string(s)));
    return {{"config", prep1d::to_json(config)},
            {"index", index},
            {"scenarios", names},
            {"auc", auc},
            {"worst_case", worst_case},
            {"failed", failed},
            {"error", error}};
}

SearchResult SearchResult::from_json(const json& j) {
    SearchResult r;
    r.config = prep1d::pipeline_from_json(j.at("config"));
    r.index = j.at("index").get<std::size_t>();
    for (const auto& s : j.at("scenarios")) r.scenarios.push_back(parse_scenario(s.get<std::string>()));
    r.auc = j.at("auc").get<std::vector<double>>();
    r.worst_case = j.at("worst_case").get<double>();
    r.failed = j.value("failed", false);
    r.error = j.value("error", "");
    return r;
}

SearchResult evaluate_candidate(const PipelineConfig& cfg, std::size_t index, std::span<const FtirCohort> cohorts,
                                const SearchSettings& settings) {
    if (cohorts.empty()) throw SpectraError("no scenario cohorts to evaluate");
    SearchResult r;
    r.config = cfg;
    r.index = index;
    for (const auto& c : cohorts) {
        r.scenarios.push_back(c.scenario);
        try {
            const auto data = ftir_cvdata(c, cfg, settings.ops);
            r.auc.push_back(eval::cross_validate(data, settings.gbdt, settings.cv).auc.mean);
        } catch (const std::exception& e) {
            r.auc.push_back(0.0);
            if (!r.failed) r.error = std::string(to_string(c.scenario)) + ": " + e.what();
            r.failed = true;
        }
    }
    r.worst_case = r.failed ? 0.0 : *std::min_element(r.auc.begin(), r.auc.end());
    return r;
}

SearchResult select_minmax(std::span<const SearchResult> results) {
    if (results.empty()) throw SpectraError("no search results to select from");
    const SearchResult* best = &results.front();
    for (const auto& r : results) {
        const double wb = best->worst_case, wr = r.worst_case;
        const double mb = best->mean_auc(), mr = r.mean_auc();
        if (wr > wb || (wr == wb && (mr > mb || (mr == mb && r.index < best->index)))) best = &r;
    }
    return *best;
}

// ---------------------------------------------------------------------------

ResultCache::ResultCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string ResultCache::key(const PipelineConfig& cfg, std::span<const FtirCohort> cohorts,
                             const SearchSettings& s) const {
    std::uint64_t h = fnv1a(cfg.key());
    for (const auto& c : cohorts) {
        const std::uint64_t ch = c.hash();
        h = fnv1a(std::string_view(reinterpret_cast<const char*>(&ch), sizeof ch), h);
    }
    const json settings = {{"gbdt", s.gbdt.to_json()},
                           {"k", s.cv.k},
                           {"seed", s.cv.seed},
                           {"threshold", s.cv.threshold},
                           {"grouped", s.cv.grouped},
                           {"ops",
                            {s.ops.poly_degree, s.ops.poly_max_iter, s.ops.poly_tol, s.ops.als_lambda, s.ops.als_p,
                             s.ops.als_iter, s.ops.sg_window, s.ops.sg_polyorder, s.ops.ma_window}}};
    h = fnv1a(settings.dump(), h);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

std::optional<SearchResult> ResultCache::get(const std::string& key) const {
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
        json j;
        in >> j;
        return SearchResult::from_json(j);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ResultCache::put(const std::string& key, const SearchResult& result) const {
    const fs::path tmp = dir_ / (key + ".json.tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw SpectraError("cannot write cache entry " + tmp.string());
        out << result.to_json().dump() << '\n';
    }
    fs::rename(tmp, dir_ / (key + ".json"));
}

GridOutcome run_grid(std::span<const FtirCohort> cohorts, const SearchSettings& settings, const ResultCache* cache,
                     unsigned jobs, std::span<const std::size_t> indices) {
    const auto all = enumerate_pipelines();
    std::vector<std::size_t> todo(indices.begin(), indices.end());
    if (todo.empty())
        for (std::size_t i = 0; i < all.size(); ++i) todo.push_back(i);
    std::sort(todo.begin(), todo.end());

    GridOutcome out;
    out.results.resize(todo.size());
    std::vector<char> hit(todo.size(), 0);
    // Folds run serially inside each candidate; parallelism is across candidates.
    SearchSettings inner = settings;
    inner.cv.jobs = 1;
    parallel_for(todo.size(), jobs, [&](std::size_t t) {
        const std::size_t idx = todo.at(t);
        if (idx >= all.size()) throw SpectraError("pipeline index out of range");
        std::string key;
        if (cache) {
            key = cache->key(all[idx], cohorts, inner);
            if (auto cached = cache->get(key)) {
                out.results[t] = std::move(*cached);
                hit[t] = 1;
                return;
            }
        }
        out.results[t] = evaluate_candidate(all[idx], idx, cohorts, inner);
        if (cache) cache->put(key, out.results[t]);
    });
    for (char h : hit) (h ? out.cache_hits : out.evaluated) += 1;
    return out;
}

// ---------------------------------------------------------------------------

void write_grid_csv(const fs::path& path, std::span<const SearchResult> results) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpectraError("cannot write " + path.string());
    out << "index,replicate_mode,region,baseline,scatter,smoothing,derivative,normalization";
    if (!results.empty())
        for (Scenario s : results.front().scenarios) out << ",auc_" << to_string(s);
    out << ",worst_case,mean_auc,flag\n";
    for (const auto& r : results) {
        const auto& c = r.config;
        out << r.index << ',' << prep1d::to_string(c.replicate_mode) << ',' << prep1d::to_string(c.region) << ','
            << prep1d::to_string(c.baseline) << ',' << prep1d::to_string(c.scatter) << ','
            << prep1d::to_string(c.smoothing) << ',' << prep1d::to_string(c.derivative) << ','
            << prep1d::to_string(c.normalization);
        for (double a : r.auc) out << ',' << format_double(a);
        out << ',' << format_double(r.worst_case) << ',' << format_double(r.mean_auc()) << ','
            << (r.failed ? "failed" : "ok") << '\n';
    }
}

std::vector<SearchResult> read_grid_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SpectraError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SpectraError("empty grid results file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::vector<Scenario> scenarios;
    for (const auto& h : header)
        if (h.rfind("auc_", 0) == 0) scenarios.push_back(parse_scenario(h.substr(4)));
    const std::vector<std::string> names = {"replicate_mode", "region",     "baseline",     "scatter",
                                            "smoothing",      "derivative", "normalization"};
    std::vector<SearchResult> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size()) throw SpectraError("malformed grid results row");
        SearchResult r;
        r.index = static_cast<std::size_t>(std::stoull(cells[0]));
        json cfg;
        for (std::size_t k = 0; k < names.size(); ++k) cfg[names[k]] = cells[k + 1];
        r.config = prep1d::pipeline_from_json(cfg);
        r.scenarios = scenarios;
        for (std::size_t k = 0; k < scenarios.size(); ++k) r.auc.push_back(parse_double(cells[8 + k]));
        r.worst_case = parse_double(cells[8 + scenarios.size()]);
        r.failed = cells.back() == "failed";
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace spectrafuse::search
