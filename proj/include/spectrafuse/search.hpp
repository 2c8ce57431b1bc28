#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectrafuse/eval.hpp"
#include "spectrafuse/prep1d.hpp"

namespace spectrafuse::search {

using prep1d::PipelineConfig;

/// Raw FTIR replicates of every patient taking part in one scenario.
struct FtirCohort {
    Scenario scenario;
    std::vector<std::string> patients;
    std::vector<int> labels;
    std::vector<std::vector<Spectrum1D>> replicates;

    /// Content hash over axes, intensities, ids and labels.
    std::uint64_t hash() const;
};

FtirCohort ftir_cohort(const SampleTable& ftir, Scenario scenario);

/// FTIR-only CV input: one row per retained vector, grouped by patient.
eval::CvData ftir_cvdata(const FtirCohort& cohort, const PipelineConfig& cfg, const prep1d::OperatorSettings& ops = {});

/// Full cartesian product, replicate_mode outermost and normalization innermost.
std::vector<PipelineConfig> enumerate_pipelines();

struct SearchResult {
    PipelineConfig config;
    std::size_t index = 0;  ///< position in enumerate_pipelines()
    std::vector<Scenario> scenarios;
    std::vector<double> auc;  ///< mean CV AUC per scenario, aligned with scenarios
    double worst_case = 0.0;
    bool failed = false;
    std::string error;

    double mean_auc() const;
    nlohmann::json to_json() const;
    static SearchResult from_json(const nlohmann::json& j);
};

struct SearchSettings {
    gbdt::GBDTParams gbdt;
    eval::CvOptions cv;
    prep1d::OperatorSettings ops;
};

/// Cross-validates cfg on every cohort. Any failure scores the candidate 0
/// and sets the flag instead of throwing.
SearchResult evaluate_candidate(const PipelineConfig& cfg, std::size_t index, std::span<const FtirCohort> cohorts,
                                const SearchSettings& settings);

/// argmax of (worst_case, mean AUC, -index).
SearchResult select_minmax(std::span<const SearchResult> results);

/// JSON file per candidate under dir, keyed by config, data hash and settings.
class ResultCache {
public:
    explicit ResultCache(std::filesystem::path dir);

    std::string key(const PipelineConfig& cfg, std::span<const FtirCohort> cohorts, const SearchSettings& s) const;
    std::optional<SearchResult> get(const std::string& key) const;
    void put(const std::string& key, const SearchResult& result) const;
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct GridOutcome {
    std::vector<SearchResult> results;  ///< in enumeration order
    std::size_t evaluated = 0;
    std::size_t cache_hits = 0;
};

/// Evaluates the given candidates (all 2,880 when empty), reusing cached
/// results when a cache is supplied.
GridOutcome run_grid(std::span<const FtirCohort> cohorts, const SearchSettings& settings, const ResultCache* cache,
                     unsigned jobs, std::span<const std::size_t> indices = {});

void write_grid_csv(const std::filesystem::path& path, std::span<const SearchResult> results);
std::vector<SearchResult> read_grid_csv(const std::filesystem::path& path);

}  // namespace spectrafuse::search
