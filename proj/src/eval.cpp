#include "spectrafuse/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>

#include "spectrafuse/util.hpp"

namespace spectrafuse::eval {

using nlohmann::ordered_json;

std::vector<std::size_t> FoldAssignment::test_rows(int f) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] == f) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldAssignment::train_rows(int f) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < fold.size(); ++i)
        if (fold[i] != f) rows.push_back(i);
    return rows;
}

FoldAssignment stratified_group_kfold(std::span<const int> labels, std::span<const std::string> groups, int k,
                                      std::uint64_t seed) {
    if (k < 2) throw SpectraError("k must be >= 2");
    if (labels.size() != groups.size()) throw SpectraError("labels and groups differ in length");

    struct GroupInfo {
        std::string id;
        int label;
        std::vector<std::size_t> rows;
    };
    std::vector<GroupInfo> infos;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, inserted] = index.emplace(groups[i], infos.size());
        if (inserted) infos.push_back({groups[i], labels[i], {}});
        GroupInfo& g = infos[it->second];
        if (g.label != labels[i]) throw SpectraError("group " + groups[i] + " mixes labels");
        g.rows.push_back(i);
    }
    if (infos.size() < static_cast<std::size_t>(k)) throw SpectraError("fewer groups than folds");

    Rng rng(seed);
    rng.shuffle(infos);
    std::stable_sort(infos.begin(), infos.end(),
                     [](const GroupInfo& a, const GroupInfo& b) { return a.rows.size() > b.rows.size(); });

    double total[2] = {0.0, 0.0};
    for (int y : labels) total[y ? 1 : 0] += 1.0;
    const double target[2] = {total[0] / k, total[1] / k};

    std::vector<std::array<double, 2>> count(static_cast<std::size_t>(k), {0.0, 0.0});
    std::vector<double> size(static_cast<std::size_t>(k), 0.0);
    FoldAssignment out{k, std::vector<int>(labels.size(), -1), std::vector<std::string>(groups.begin(), groups.end())};
    for (const auto& g : infos) {
        const int c = g.label ? 1 : 0;
        const double s = static_cast<double>(g.rows.size());
        int best = 0;
        double best_cost = INFINITY;
        for (int f = 0; f < k; ++f) {
            const double before = count[f][c] - target[c];
            const double after = before + s;
            const double cost = after * after - before * before;
            if (cost < best_cost || (cost == best_cost && size[f] < size[best])) {
                best = f;
                best_cost = cost;
            }
        }
        count[best][c] += s;
        size[best] += s;
        for (std::size_t r : g.rows) out.fold[r] = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace {

void require_both_classes(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw SpectraError("scores and labels differ in length");
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) throw SpectraError("single-class input");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    require_both_classes(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum of positive midranks (1-based), kept in half-units so it stays exact.
    double rank_sum2 = 0.0;
    double n_pos = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double mid2 = static_cast<double>(i + 1 + j);  // 2 * average of ranks i+1..j
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]]) {
                rank_sum2 += mid2;
                n_pos += 1.0;
            }
        i = j;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    const double u = 0.5 * (rank_sum2 - n_pos * (n_pos + 1.0));
    return u / (n_pos * n_neg);
}

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    require_both_classes(scores, labels);
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool called = scores[i] >= threshold;
        if (labels[i])
            (called ? tp : fn) += 1.0;
        else
            (called ? fp : tn) += 1.0;
    }
    ThresholdMetrics m;
    m.sensitivity = tp / (tp + fn);
    m.specificity = tn / (tn + fp);
    m.balanced_accuracy = 0.5 * (m.sensitivity + m.specificity);
    return m;
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
    require_both_classes(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double neg = static_cast<double>(n) - pos;
    std::vector<RocPoint> curve{{0.0, 0.0}};
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp) += 1.0;
            ++j;
        }
        curve.push_back({fp / neg, tp / pos});
        i = j;
    }
    return curve;
}

double tpr_at(std::span<const RocPoint> curve, double fpr) {
    double best = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const RocPoint& a = curve[i];
        if (a.fpr == fpr) best = std::max(best, a.tpr);
        if (i + 1 < curve.size()) {
            const RocPoint& b = curve[i + 1];
            if (a.fpr < fpr && fpr < b.fpr) {
                const double w = (fpr - a.fpr) / (b.fpr - a.fpr);
                best = std::max(best, a.tpr + w * (b.tpr - a.tpr));
            }
        }
    }
    return best;
}

MeanRoc mean_roc(const std::vector<std::vector<RocPoint>>& folds, int grid_points) {
    if (folds.empty()) throw SpectraError("no ROC curves to average");
    if (grid_points < 2) throw SpectraError("ROC grid needs at least 2 points");
    MeanRoc out;
    std::vector<double> values(folds.size());
    for (int g = 0; g < grid_points; ++g) {
        const double x = static_cast<double>(g) / (grid_points - 1);
        for (std::size_t f = 0; f < folds.size(); ++f) values[f] = tpr_at(folds[f], x);
        const Stat s = summarize(values);
        out.fpr.push_back(x);
        out.tpr_mean.push_back(s.mean);
        out.tpr_std.push_back(s.std);
    }
    return out;
}

Stat summarize(std::span<const double> values) {
    Stat s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

ordered_json MetricsSummary::to_json() const {
    auto stat = [](const Stat& s) { return ordered_json{{"mean", s.mean}, {"std", s.std}}; };
    ordered_json per_fold = ordered_json::array();
    for (const auto& f : folds)
        per_fold.push_back({{"fold", f.fold},
                            {"n_train", f.n_train},
                            {"n_test", f.n_test},
                            {"auc", f.auc},
                            {"sensitivity", f.sensitivity},
                            {"specificity", f.specificity},
                            {"balanced_accuracy", f.balanced_accuracy}});
    return {{"n", n},
            {"n_cancer", n_cancer},
            {"n_control", n_control},
            {"n_rows", n_rows},
            {"k", k},
            {"seed", seed},
            {"threshold", threshold},
            {"auc", stat(auc)},
            {"sensitivity", stat(sensitivity)},
            {"specificity", stat(specificity)},
            {"balanced_accuracy", stat(balanced_accuracy)},
            {"folds", per_fold}};
}

// ---------------------------------------------------------------------------
// Cross-validation

void CvData::validate() const {
    if (blocks.empty()) throw SpectraError("no modality blocks");
    if (groups.size() != labels.size()) throw SpectraError("groups and labels differ in length");
    for (const auto& b : blocks)
        if (static_cast<std::size_t>(b.rows()) != labels.size()) throw SpectraError("block rows differ from labels");
}

FoldReport fit_and_score(const CvData& data, std::span<const std::size_t> train, std::span<const std::size_t> test,
                         const gbdt::GBDTParams& params, double threshold) {
    std::vector<fusion::ModalityBlock> train_blocks, test_blocks;
    for (const auto& block : data.blocks) {
        const auto tr = block.select_rows(train);
        const auto scaler = fusion::zscore_fit(tr);
        train_blocks.push_back(fusion::block_scale(fusion::zscore_transform(scaler, tr)));
        test_blocks.push_back(fusion::block_scale(fusion::zscore_transform(scaler, block.select_rows(test))));
    }
    auto pick = [&](std::span<const std::size_t> rows) {
        std::vector<int> y;
        std::vector<std::string> g;
        for (std::size_t r : rows) {
            y.push_back(data.labels[r]);
            g.push_back(data.groups[r]);
        }
        return std::pair{y, g};
    };
    auto [ytr, gtr] = pick(train);
    auto [yte, gte] = pick(test);
    const auto xtr = fusion::fuse(train_blocks, ytr, gtr);
    const auto xte = fusion::fuse(test_blocks, yte, gte);

    const auto model = gbdt::train(xtr.values, xtr.labels, params);
    const auto scores = model.predict_proba(xte.values);
    FoldReport rep;
    rep.n_train = train.size();
    rep.n_test = test.size();
    rep.auc = roc_auc(scores, xte.labels);
    const auto tm = threshold_metrics(scores, xte.labels, threshold);
    rep.sensitivity = tm.sensitivity;
    rep.specificity = tm.specificity;
    rep.balanced_accuracy = tm.balanced_accuracy;
    rep.roc = roc_curve(scores, xte.labels);
    return rep;
}

namespace {

std::vector<std::string> effective_groups(const CvData& data, bool grouped) {
    if (grouped) return data.groups;
    std::vector<std::string> g(data.rows());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = "row" + std::to_string(i);
    return g;
}

bool both_classes(const CvData& data, std::span<const std::size_t> rows) {
    bool has[2] = {false, false};
    for (std::size_t r : rows) has[data.labels[r] ? 1 : 0] = true;
    return has[0] && has[1];
}

bool assignment_usable(const CvData& data, const FoldAssignment& fa) {
    for (int f = 0; f < fa.k; ++f)
        if (!both_classes(data, fa.train_rows(f)) || !both_classes(data, fa.test_rows(f))) return false;
    return true;
}

constexpr std::uint64_t kReseed = 0x9E3779B97F4A7C15ULL;

}  // namespace

FoldAssignment assign_folds(const CvData& data, const CvOptions& options) {
    data.validate();
    const auto groups = effective_groups(data, options.grouped);
    auto fa = stratified_group_kfold(data.labels, groups, options.k, options.seed);
    if (assignment_usable(data, fa)) return fa;
    fa = stratified_group_kfold(data.labels, groups, options.k, options.seed ^ kReseed);
    if (assignment_usable(data, fa)) return fa;
    throw SpectraError("fold assignment leaves a fold with a single class");
}

MetricsSummary cross_validate(const CvData& data, const gbdt::GBDTParams& params, const CvOptions& options) {
    const FoldAssignment fa = assign_folds(data, options);
    MetricsSummary summary;
    summary.k = options.k;
    summary.seed = options.seed;
    summary.threshold = options.threshold;
    summary.n_rows = data.rows();
    std::map<std::string, int> patient_label;
    for (std::size_t i = 0; i < data.rows(); ++i) patient_label.emplace(data.groups[i], data.labels[i]);
    summary.n = patient_label.size();
    for (const auto& [_, y] : patient_label) (y ? summary.n_cancer : summary.n_control) += 1;

    summary.folds.resize(static_cast<std::size_t>(options.k));
    parallel_for(summary.folds.size(), options.jobs, [&](std::size_t f) {
        const auto fi = static_cast<int>(f);
        const auto train = fa.train_rows(fi);
        const auto test = fa.test_rows(fi);
        summary.folds[f] = fit_and_score(data, train, test, params, options.threshold);
        summary.folds[f].fold = fi;
    });

    std::vector<double> auc, sens, spec, bacc;
    for (const auto& f : summary.folds) {
        auc.push_back(f.auc);
        sens.push_back(f.sensitivity);
        spec.push_back(f.specificity);
        bacc.push_back(f.balanced_accuracy);
    }
    summary.auc = summarize(auc);
    summary.sensitivity = summarize(sens);
    summary.specificity = summarize(spec);
    summary.balanced_accuracy = summarize(bacc);
    return summary;
}

std::vector<LearningCurveRow> learning_curve(const CvData& data, std::span<const double> fractions,
                                             const gbdt::GBDTParams& params, const CvOptions& options) {
    for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0)) throw SpectraError("learning-curve fractions must lie in (0, 1]");
    const FoldAssignment fa = assign_folds(data, options);
    const auto groups = effective_groups(data, options.grouped);

    std::vector<LearningCurveRow> out;
    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
        const double frac = fractions[fi];
        std::vector<double> auc(static_cast<std::size_t>(fa.k)), rows(static_cast<std::size_t>(fa.k));
        parallel_for(static_cast<std::size_t>(fa.k), options.jobs, [&](std::size_t f) {
            const auto train = fa.train_rows(static_cast<int>(f));
            // Distinct training groups per class, in first-appearance order.
            std::vector<std::string> by_class[2];
            std::map<std::string, bool> seen;
            for (std::size_t r : train)
                if (seen.emplace(groups[r], true).second) by_class[data.labels[r] ? 1 : 0].push_back(groups[r]);
            std::map<std::string, bool> keep;
            Rng rng(options.seed + 7919 * (f + 1) + 104729 * (fi + 1));
            for (auto& ids : by_class) {
                rng.shuffle(ids);
                const auto take = std::max<std::size_t>(
                    1, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(ids.size()) - 1e-9)));
                for (std::size_t t = 0; t < std::min(take, ids.size()); ++t) keep[ids[t]] = true;
            }
            std::vector<std::size_t> sub;
            for (std::size_t r : train)
                if (keep.count(groups[r])) sub.push_back(r);
            if (!both_classes(data, sub)) throw SpectraError("learning-curve fraction yields a single-class train set");
            const auto rep = fit_and_score(data, sub, fa.test_rows(static_cast<int>(f)), params, options.threshold);
            auc[f] = rep.auc;
            rows[f] = static_cast<double>(sub.size());
        });
        out.push_back({frac, summarize(rows).mean, summarize(auc)});
    }
    return out;
}

// ---------------------------------------------------------------------------

PcaResult pca_project(const Eigen::MatrixXd& X, int n_components) {
    if (X.rows() < 2) throw SpectraError("PCA needs at least 2 rows");
    if (n_components < 1) throw SpectraError("PCA needs at least 1 component");
    const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
    const double total = centered.squaredNorm();
    if (!(total > 1e-24)) throw SpectraError("PCA on zero-variance data");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto nc = std::min<Eigen::Index>(n_components, svd.singularValues().size());
    PcaResult out;
    out.loadings = svd.matrixV().leftCols(nc);
    out.scores = svd.matrixU().leftCols(nc) * svd.singularValues().head(nc).asDiagonal();
    for (Eigen::Index c = 0; c < nc; ++c) {
        Eigen::Index arg;
        out.loadings.col(c).cwiseAbs().maxCoeff(&arg);
        if (out.loadings(arg, c) < 0) {
            out.loadings.col(c) *= -1.0;
            out.scores.col(c) *= -1.0;
        }
        const double s = svd.singularValues()[c];
        out.explained_variance_ratio.push_back(s * s / total);
    }
    return out;
}

}  // namespace spectrafuse::eval
