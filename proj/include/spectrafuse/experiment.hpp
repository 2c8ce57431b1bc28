#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectrafuse/core.hpp"
#include "spectrafuse/eval.hpp"
#include "spectrafuse/gbdt.hpp"
#include "spectrafuse/prep1d.hpp"
#include "spectrafuse/search.hpp"

namespace spectrafuse::experiment {

struct ExperimentConfig {
    std::filesystem::path dataset;
    Scenario scenario = Scenario::Breast;
    std::vector<Modality> modalities{Modality::FTIR};
    prep1d::PipelineConfig ftir_pipeline = prep1d::selected_ftir_pipeline();
    gbdt::GBDTParams gbdt;
    int k = 10;
    std::uint64_t seed = 42;
    double threshold = 0.5;
    std::filesystem::path output = "reports";
    /// Expands to the seven modality subsets in both scenarios.
    bool suite = false;
    /// Training fractions for learning_curve.csv; empty skips it.
    std::vector<double> learning_curve;
    /// Writes pca_<modality>.csv/json for each modality of a cell.
    bool pca = false;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    /// Relative paths resolve against base_dir.
    static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// The seven subsets: three unimodal, three bimodal, trimodal.
std::vector<std::vector<Modality>> seven_configurations();
/// "FTIR", "FTIR+Raman", ... in canonical modality order.
std::string configuration_name(std::span<const Modality> modalities);

struct Cell {
    Scenario scenario;
    std::vector<Modality> modalities;

    /// "<scenario>_<configuration>", also the report directory name.
    std::string name() const;
};

std::vector<Cell> expand(const ExperimentConfig& cfg);

/// Replicate-level rows for FTIR alone, otherwise one row per patient of the
/// aligned intersection with FTIR replicates averaged after preprocessing.
eval::CvData build_cvdata(const Dataset& data, Scenario scenario, std::span<const Modality> modalities,
                          const prep1d::PipelineConfig& ftir, const prep1d::OperatorSettings& ops = {});

/// Always patient level, also for FTIR alone.
eval::CvData patient_level_cvdata(const Dataset& data, Scenario scenario, std::span<const Modality> modalities,
                                  const prep1d::PipelineConfig& ftir, const prep1d::OperatorSettings& ops = {});

/// Content hash of every record (ids, groups, axes, intensities, blanks).
std::uint64_t dataset_hash(const Dataset& data);
std::string hex64(std::uint64_t v);

struct CellOutcome {
    Cell cell;
    std::filesystem::path dir;
    bool ok = false;
    std::string error;
    std::optional<eval::MetricsSummary> metrics;
};

/// Runs one cell and writes its reports into dir. Never throws for cell
/// failures; they are recorded in the outcome and in dir/error.json.
CellOutcome run_cell(const Dataset& data, const ExperimentConfig& cfg, const Cell& cell,
                     const std::filesystem::path& dir, unsigned jobs = 1);

/// Loads the dataset once and runs every expanded cell, cells in parallel.
std::vector<CellOutcome> run_experiment(const ExperimentConfig& cfg, const Dataset& data, unsigned jobs = 1);
std::vector<CellOutcome> run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

struct GridSearchOutcome {
    search::GridOutcome grid;
    search::SearchResult winner;
};

/// Sweeps every FTIR pipeline over both scenarios and writes
/// grid_results.csv, winner.json and summary.json into out.
GridSearchOutcome run_grid_search(const ExperimentConfig& cfg, const Dataset& data, const std::filesystem::path& out,
                                  const std::filesystem::path& cache_dir, unsigned jobs = 1,
                                  std::span<const std::size_t> indices = {});

/// Schema check of a dataset manifest; returns a summary of its contents.
nlohmann::ordered_json validate_dataset(const std::filesystem::path& manifest);
nlohmann::ordered_json describe_dataset(const Dataset& data);

/// Machine-readable error document.
nlohmann::ordered_json error_json(std::string_view command, std::string_view message);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spectrafuse::experiment
