#include "spectrafuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "spectrafuse/prep1d.hpp"

namespace spectrafuse::fusion {

using nlohmann::json;

ModalityBlock ModalityBlock::select_rows(std::span<const std::size_t> rows) const {
    ModalityBlock out{modality, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), values.cols()), feature_names};
    for (std::size_t r = 0; r < rows.size(); ++r) out.values.row(static_cast<Eigen::Index>(r)) = values.row(rows[r]);
    return out;
}

ModalityBlock make_block(Modality m, const std::vector<std::vector<double>>& rows, std::vector<std::string> names) {
    if (rows.empty()) throw SpectraError("block needs at least one row");
    const std::size_t d = rows.front().size();
    if (d == 0) throw SpectraError("block needs at least one feature");
    if (names.empty()) {
        names.reserve(d);
        for (std::size_t j = 0; j < d; ++j) names.push_back(std::to_string(j));
    }
    if (names.size() != d) throw SpectraError("feature-name count does not match width");
    ModalityBlock block{m, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d)),
                        std::move(names)};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d) throw SpectraError("ragged rows in modality block");
        for (std::size_t j = 0; j < d; ++j) block.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return block;
}

// ---------------------------------------------------------------------------

ZScoreScaler::ZScoreScaler(Modality m, Eigen::VectorXd mu, Eigen::VectorXd sigma)
    : modality_(m), mu_(std::move(mu)), sigma_(std::move(sigma)) {
    if (mu_.size() != sigma_.size()) throw SpectraError("scaler mu/sigma length mismatch");
    degenerate_.resize(static_cast<std::size_t>(sigma_.size()));
    for (Eigen::Index j = 0; j < sigma_.size(); ++j) degenerate_[j] = !(sigma_[j] >= kDegenerateSigma);
}

json ZScoreScaler::to_json() const {
    return {{"modality", std::string(to_string(modality_))},
            {"mu", std::vector<double>(mu_.begin(), mu_.end())},
            {"sigma", std::vector<double>(sigma_.begin(), sigma_.end())},
            {"degenerate", degenerate_}};
}

ZScoreScaler ZScoreScaler::from_json(const json& j) {
    const auto mu = j.at("mu").get<std::vector<double>>();
    const auto sigma = j.at("sigma").get<std::vector<double>>();
    return ZScoreScaler(parse_modality(j.at("modality").get<std::string>()),
                        Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size())),
                        Eigen::Map<const Eigen::VectorXd>(sigma.data(), static_cast<Eigen::Index>(sigma.size())));
}

ZScoreScaler zscore_fit(const ModalityBlock& train) {
    const Eigen::Index n = train.rows();
    if (n < 2) throw SpectraError("z-score fit needs at least 2 training rows");
    Eigen::VectorXd mu(train.width()), sigma(train.width());
    for (Eigen::Index j = 0; j < train.width(); ++j) {
        const auto col = train.values.col(j);
        const double m = col.sum() / static_cast<double>(n);
        mu[j] = m;
        sigma[j] = std::sqrt((col.array() - m).square().sum() / static_cast<double>(n));
    }
    return ZScoreScaler(train.modality, std::move(mu), std::move(sigma));
}

ModalityBlock zscore_transform(const ZScoreScaler& scaler, const ModalityBlock& block) {
    if (block.width() != scaler.mu().size()) throw SpectraError("block width does not match scaler");
    ModalityBlock out = block;
    for (Eigen::Index j = 0; j < block.width(); ++j) {
        if (scaler.degenerate()[static_cast<std::size_t>(j)])
            out.values.col(j).setZero();
        else
            out.values.col(j) = (block.values.col(j).array() - scaler.mu()[j]) / scaler.sigma()[j];
    }
    return out;
}

double block_divisor(Eigen::Index d) {
    if (d < 1) throw SpectraError("block width must be >= 1");
    return std::sqrt(std::sqrt(static_cast<double>(d)));
}

ModalityBlock block_scale(const ModalityBlock& block) {
    ModalityBlock out = block;
    out.values /= block_divisor(block.width());
    return out;
}

// ---------------------------------------------------------------------------

FeatureMatrix fuse(std::span<const ModalityBlock> blocks, std::vector<int> labels, std::vector<std::string> groups) {
    if (blocks.empty()) throw SpectraError("nothing to fuse");
    std::vector<const ModalityBlock*> ordered;
    for (const auto& b : blocks) ordered.push_back(&b);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](auto* a, auto* b) { return static_cast<int>(a->modality) < static_cast<int>(b->modality); });
    const Eigen::Index n = ordered.front()->rows();
    Eigen::Index width = 0;
    for (auto* b : ordered) {
        if (b->rows() != n) throw SpectraError("row misalignment between modality blocks");
        width += b->width();
    }
    if (static_cast<Eigen::Index>(labels.size()) != n || static_cast<Eigen::Index>(groups.size()) != n)
        throw SpectraError("labels/groups do not match block rows");

    FeatureMatrix fm{Eigen::MatrixXd(n, width), std::move(labels), std::move(groups), {}};
    Eigen::Index offset = 0;
    for (auto* b : ordered) {
        fm.values.middleCols(offset, b->width()) = b->values;
        offset += b->width();
        const std::string prefix = std::string(to_string(b->modality)) + ":";
        for (const auto& name : b->feature_names) fm.feature_names.push_back(prefix + name);
    }
    return fm;
}

std::vector<std::string> align_patients(const std::map<Modality, std::vector<std::string>>& available,
                                        std::span<const Modality> subset) {
    if (subset.empty()) throw SpectraError("modality subset is empty");
    std::vector<std::string> common;
    bool first = true;
    for (Modality m : subset) {
        auto it = available.find(m);
        if (it == available.end()) throw SpectraError("modality " + std::string(to_string(m)) + " not in dataset");
        std::vector<std::string> ids = it->second;
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        if (first) {
            common = std::move(ids);
            first = false;
        } else {
            std::vector<std::string> next;
            std::set_intersection(common.begin(), common.end(), ids.begin(), ids.end(), std::back_inserter(next));
            common = std::move(next);
        }
    }
    if (common.empty()) throw SpectraError("empty patient intersection across modalities");
    return common;
}

std::vector<double> collapse_replicates_for_fusion(std::span<const std::vector<double>> replicates) {
    if (replicates.empty()) throw SpectraError("no FTIR replicates to collapse");
    return prep1d::average_vectors(replicates);
}

}  // namespace spectrafuse::fusion
