#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "spectrafuse/core.hpp"

namespace spectrafuse::fusion {

/// One modality's features, one row per sample.
struct ModalityBlock {
    Modality modality;
    Eigen::MatrixXd values;
    std::vector<std::string> feature_names;

    Eigen::Index rows() const { return values.rows(); }
    /// d_m, the feature count.
    Eigen::Index width() const { return values.cols(); }

    ModalityBlock select_rows(std::span<const std::size_t> rows) const;
};

/// Builds a block from row vectors of equal length.
ModalityBlock make_block(Modality m, const std::vector<std::vector<double>>& rows, std::vector<std::string> names = {});

/// Per-feature mean and population std of a training block. Immutable after fit.
class ZScoreScaler {
public:
    ZScoreScaler(Modality m, Eigen::VectorXd mu, Eigen::VectorXd sigma);

    Modality modality() const { return modality_; }
    const Eigen::VectorXd& mu() const { return mu_; }
    const Eigen::VectorXd& sigma() const { return sigma_; }
    /// sigma below 1e-12; such features standardize to 0.
    const std::vector<bool>& degenerate() const { return degenerate_; }

    nlohmann::json to_json() const;
    static ZScoreScaler from_json(const nlohmann::json& j);

private:
    Modality modality_;
    Eigen::VectorXd mu_;
    Eigen::VectorXd sigma_;
    std::vector<bool> degenerate_;
};

inline constexpr double kDegenerateSigma = 1e-12;

ZScoreScaler zscore_fit(const ModalityBlock& train);
ModalityBlock zscore_transform(const ZScoreScaler& scaler, const ModalityBlock& block);

/// d_m^(1/4).
double block_divisor(Eigen::Index d);
ModalityBlock block_scale(const ModalityBlock& block);

/// Fused samples: values, labels (1 = cancer), groups (patient id).
struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<int> labels;
    std::vector<std::string> groups;
    std::vector<std::string> feature_names;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Horizontal concatenation in canonical modality order; feature names get a
/// "<modality>:" prefix.
FeatureMatrix fuse(std::span<const ModalityBlock> blocks, std::vector<int> labels, std::vector<std::string> groups);

/// Sorted intersection of patient ids available in every modality of subset.
std::vector<std::string> align_patients(const std::map<Modality, std::vector<std::string>>& available,
                                        std::span<const Modality> subset);

/// Mean of one patient's preprocessed FTIR replicate vectors.
std::vector<double> collapse_replicates_for_fusion(std::span<const std::vector<double>> replicates);

}  // namespace spectrafuse::fusion
