#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spectrafuse/eval.hpp"

namespace spectrafuse::plots {

struct RocSeries {
    std::string label;
    eval::MeanRoc roc;
    double auc_mean = 0.0;
    double auc_std = 0.0;
};

/// One shaded +-std band and one mean path per series.
std::string roc_svg(const std::string& title, const std::vector<RocSeries>& series);

struct CurveSeries {
    std::string label;
    std::vector<double> x, y, y_std;
};

std::string learning_curve_svg(const std::string& title, const std::vector<CurveSeries>& series);

struct ScatterPoint {
    double x = 0.0, y = 0.0;
    std::string group;
};

/// Axis labels carry the explained-variance percentage of each component.
std::string pca_svg(const std::string& title, const std::vector<ScatterPoint>& points, double var1, double var2);

/// Fold curves from a "fold,fpr,tpr" CSV, ordered by fold.
std::vector<std::vector<eval::RocPoint>> read_roc_csv(const std::filesystem::path& path);

/// Renders every plot the reports under report_dir support (the directory
/// itself or its immediate subdirectories holding metrics.json) into out_dir.
/// Throws when no report is found.
std::vector<std::filesystem::path> render_reports(const std::filesystem::path& report_dir,
                                                  const std::filesystem::path& out_dir);

}  // namespace spectrafuse::plots
