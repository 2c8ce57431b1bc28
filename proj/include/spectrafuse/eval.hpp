#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spectrafuse/fusion.hpp"
#include "spectrafuse/gbdt.hpp"

namespace spectrafuse::eval {

/// Fold index per row; all rows of a group share one fold.
struct FoldAssignment {
    int k = 0;
    std::vector<int> fold;
    std::vector<std::string> groups;

    std::vector<std::size_t> test_rows(int f) const;
    std::vector<std::size_t> train_rows(int f) const;
};

/// Greedy grouped stratification: groups are shuffled by seed, sorted by
/// size (descending, stable) and each is placed in the fold where it least
/// increases the squared deviation of per-class row counts from T_c / k.
/// Ties go to the fold with fewer rows, then the lowest index.
FoldAssignment stratified_group_kfold(std::span<const int> labels, std::span<const std::string> groups, int k,
                                      std::uint64_t seed);

/// Mann-Whitney estimate: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double balanced_accuracy = 0.0;
};

/// score >= threshold is called positive.
ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Empirical ROC from (0,0) to (1,1), one point per distinct score.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

struct MeanRoc {
    std::vector<double> fpr;
    std::vector<double> tpr_mean;
    std::vector<double> tpr_std;
};

/// Vertical averaging on a uniform FPR grid of `grid_points` nodes.
MeanRoc mean_roc(const std::vector<std::vector<RocPoint>>& folds, int grid_points = 101);
/// TPR of a curve at a given FPR (linear between points, upper value on vertical runs).
double tpr_at(std::span<const RocPoint> curve, double fpr);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  ///< sample (n-1) standard deviation
};
Stat summarize(std::span<const double> values);

struct FoldReport {
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double auc = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double balanced_accuracy = 0.0;
    std::vector<RocPoint> roc;
};

struct MetricsSummary {
    std::vector<FoldReport> folds;
    Stat auc, sensitivity, specificity, balanced_accuracy;
    std::size_t n = 0;  ///< patients
    std::size_t n_cancer = 0;
    std::size_t n_control = 0;
    std::size_t n_rows = 0;
    int k = 0;
    std::uint64_t seed = 0;  ///< seed of the fold assignment actually used
    double threshold = 0.5;

    nlohmann::ordered_json to_json() const;
};

/// Row-aligned, unscaled modality blocks plus labels and patient groups.
struct CvData {
    std::vector<fusion::ModalityBlock> blocks;
    std::vector<int> labels;
    std::vector<std::string> groups;

    std::size_t rows() const { return labels.size(); }
    void validate() const;
};

struct CvOptions {
    int k = 10;
    std::uint64_t seed = 42;
    double threshold = 0.5;
    unsigned jobs = 1;
    /// false treats every row as its own group (naive row-level CV).
    bool grouped = true;
};

/// Fits fold-local scalers and a booster on the training rows only, then
/// scores the held-out fold. Fold results are ordered by fold index.
FoldReport fit_and_score(const CvData& data, std::span<const std::size_t> train, std::span<const std::size_t> test,
                         const gbdt::GBDTParams& params, double threshold);

/// Fold assignment with the single re-seed retry used by cross_validate.
FoldAssignment assign_folds(const CvData& data, const CvOptions& options);

MetricsSummary cross_validate(const CvData& data, const gbdt::GBDTParams& params, const CvOptions& options = {});

struct LearningCurveRow {
    double fraction = 0.0;
    double mean_train_rows = 0.0;
    Stat auc;
};

/// Retrains on a stratified, seeded subsample of each fold's training groups.
std::vector<LearningCurveRow> learning_curve(const CvData& data, std::span<const double> fractions,
                                             const gbdt::GBDTParams& params, const CvOptions& options = {});

struct PcaResult {
    Eigen::MatrixXd scores;    ///< rows x components
    Eigen::MatrixXd loadings;  ///< features x components
    std::vector<double> explained_variance_ratio;
};

/// Projection of centered data on its leading right singular vectors; each
/// loading vector is signed so that its largest-magnitude entry is positive.
PcaResult pca_project(const Eigen::MatrixXd& X, int n_components = 2);

}  // namespace spectrafuse::eval
