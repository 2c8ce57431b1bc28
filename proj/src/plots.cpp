#include "spectrafuse/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "spectrafuse/core.hpp"

namespace spectrafuse::plots {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string color(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

/// Plot frame with linear data-to-pixel mapping.
class Frame {
public:
    Frame(double x0, double x1, double y0, double y1) : x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
        if (x1_ <= x0_) x1_ = x0_ + 1.0;
        if (y1_ <= y0_) y1_ = y0_ + 1.0;
    }

    double px(double x) const { return kLeft + (x - x0_) / (x1_ - x0_) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0_) / (y1_ - y0_) * (kHeight - kTop - kBottom); }

    std::string open(const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
        std::ostringstream s;
        s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
          << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
        s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        s << "<text class=\"title\" x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
          << escape(title) << "</text>\n";
        s << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
          << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 5; ++t) {
            const double xv = x0_ + (x1_ - x0_) * t / 5.0, yv = y0_ + (y1_ - y0_) * t / 5.0;
            s << "<text x=\"" << num(px(xv)) << "\" y=\"" << kHeight - kBottom + 16
              << "\" text-anchor=\"middle\">" << tick(xv) << "</text>\n";
            s << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
              << "</text>\n";
        }
        s << "<text class=\"xlabel\" x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
          << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
        s << "<text class=\"ylabel\" x=\"16\" y=\"" << (kTop + kHeight - kBottom) / 2
          << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (kTop + kHeight - kBottom) / 2 << ")\">"
          << escape(ylabel) << "</text>\n";
        return s.str();
    }

    std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys) const {
        std::string d;
        for (std::size_t i = 0; i < xs.size(); ++i)
            d += (i == 0 ? "M" : " L") + num(px(xs[i])) + "," + num(py(ys[i]));
        return d;
    }

    std::string legend(std::size_t i, const std::string& text, const std::string& col) const {
        const int y = kTop + 14 + static_cast<int>(i) * 16;
        const int x = kWidth - kRight - 190;
        return "<line x1=\"" + std::to_string(x) + "\" y1=\"" + std::to_string(y - 4) + "\" x2=\"" +
               std::to_string(x + 18) + "\" y2=\"" + std::to_string(y - 4) + "\" stroke=\"" + col +
               "\" stroke-width=\"2\"/>\n<text x=\"" + std::to_string(x + 24) + "\" y=\"" + std::to_string(y) +
               "\">" + escape(text) + "</text>\n";
    }

    static constexpr int kWidth = 640, kHeight = 480, kLeft = 60, kRight = 20, kTop = 36, kBottom = 50;

private:
    static std::string tick(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return buf;
    }

    double x0_, x1_, y0_, y1_;
};

std::string band_path(const Frame& f, const std::vector<double>& x, const std::vector<double>& lo,
                      const std::vector<double>& hi) {
    std::string d;
    for (std::size_t i = 0; i < x.size(); ++i) d += (i == 0 ? "M" : " L") + num(f.px(x[i])) + "," + num(f.py(hi[i]));
    for (std::size_t i = x.size(); i-- > 0;) d += " L" + num(f.px(x[i])) + "," + num(f.py(lo[i]));
    return d + " Z";
}

std::string fixed(double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw SpectraError("cannot open " + p.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SpectraError("malformed " + p.string() + ": " + e.what());
    }
    return j;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw SpectraError("cannot open " + p.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    if (rows.empty()) throw SpectraError("empty file " + p.string());
    return rows;
}

}  // namespace

std::string roc_svg(const std::string& title, const std::vector<RocSeries>& series) {
    const Frame f(0.0, 1.0, 0.0, 1.0);
    std::string s = f.open(title, "False positive rate", "True positive rate");
    s += "<line x1=\"" + num(f.px(0)) + "\" y1=\"" + num(f.py(0)) + "\" x2=\"" + num(f.px(1)) + "\" y2=\"" +
         num(f.py(1)) + "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& r = series[i].roc;
        std::vector<double> lo(r.fpr.size()), hi(r.fpr.size());
        for (std::size_t p = 0; p < r.fpr.size(); ++p) {
            lo[p] = std::max(0.0, r.tpr_mean[p] - r.tpr_std[p]);
            hi[p] = std::min(1.0, r.tpr_mean[p] + r.tpr_std[p]);
        }
        s += "<path class=\"band\" d=\"" + band_path(f, r.fpr, lo, hi) + "\" fill=\"" + color(i) +
             "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& r = series[i].roc;
        s += "<path class=\"mean\" d=\"" + f.polyline(r.fpr, r.tpr_mean) + "\" fill=\"none\" stroke=\"" + color(i) +
             "\" stroke-width=\"2\"/>\n";
        s += f.legend(i,
                      series[i].label + " (AUC " + fixed(series[i].auc_mean, 3) + " ± " +
                          fixed(series[i].auc_std, 3) + ")",
                      color(i));
    }
    return s + "</svg>\n";
}

std::string learning_curve_svg(const std::string& title, const std::vector<CurveSeries>& series) {
    double x1 = 0.0, y0 = 1.0, y1 = 0.0;
    for (const auto& c : series)
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            x1 = std::max(x1, c.x[i]);
            y0 = std::min(y0, c.y[i] - c.y_std[i]);
            y1 = std::max(y1, c.y[i] + c.y_std[i]);
        }
    y0 = std::max(0.0, std::floor(y0 * 10.0) / 10.0);
    y1 = std::min(1.0, std::ceil(y1 * 10.0) / 10.0);
    const Frame f(0.0, x1 > 0.0 ? x1 * 1.05 : 1.0, y0, y1);
    std::string s = f.open(title, "Training rows", "Mean CV AUC");
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& c = series[i];
        std::vector<double> lo(c.y.size()), hi(c.y.size());
        for (std::size_t p = 0; p < c.y.size(); ++p) {
            lo[p] = std::max(y0, c.y[p] - c.y_std[p]);
            hi[p] = std::min(y1, c.y[p] + c.y_std[p]);
        }
        s += "<path class=\"band\" d=\"" + band_path(f, c.x, lo, hi) + "\" fill=\"" + color(i) +
             "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        s += "<path class=\"mean\" d=\"" + f.polyline(c.x, c.y) + "\" fill=\"none\" stroke=\"" + color(i) +
             "\" stroke-width=\"2\"/>\n";
        for (std::size_t p = 0; p < c.x.size(); ++p)
            s += "<circle cx=\"" + num(f.px(c.x[p])) + "\" cy=\"" + num(f.py(c.y[p])) + "\" r=\"3\" fill=\"" +
                 color(i) + "\"/>\n";
        s += f.legend(i, c.label, color(i));
    }
    return s + "</svg>\n";
}

std::string pca_svg(const std::string& title, const std::vector<ScatterPoint>& points, double var1, double var2) {
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    if (!points.empty()) {
        x0 = x1 = points.front().x;
        y0 = y1 = points.front().y;
    }
    for (const auto& p : points) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double mx = 0.05 * (x1 - x0 + 1e-12), my = 0.05 * (y1 - y0 + 1e-12);
    const Frame f(x0 - mx, x1 + mx, y0 - my, y1 + my);
    std::string s = f.open(title, "PC1 (" + fixed(100.0 * var1, 1) + "%)", "PC2 (" + fixed(100.0 * var2, 1) + "%)");
    std::map<std::string, std::size_t> groups;
    for (const auto& p : points) groups.emplace(p.group, groups.size());
    for (const auto& p : points)
        s += "<circle cx=\"" + num(f.px(p.x)) + "\" cy=\"" + num(f.py(p.y)) + "\" r=\"3.5\" fill=\"" +
             color(groups.at(p.group)) + "\" fill-opacity=\"0.75\"/>\n";
    std::size_t i = 0;
    for (const auto& [g, idx] : groups) s += f.legend(i++, g, color(idx));
    return s + "</svg>\n";
}

std::vector<std::vector<eval::RocPoint>> read_roc_csv(const fs::path& path) {
    const auto rows = read_csv(path);
    if (rows.front() != std::vector<std::string>{"fold", "fpr", "tpr"})
        throw SpectraError("unexpected ROC header in " + path.string());
    std::map<int, std::vector<eval::RocPoint>> folds;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw SpectraError("malformed ROC row in " + path.string());
        folds[std::stoi(rows[i][0])].push_back({parse_double(rows[i][1]), parse_double(rows[i][2])});
    }
    if (folds.empty()) throw SpectraError("no ROC points in " + path.string());
    std::vector<std::vector<eval::RocPoint>> out;
    for (auto& [_, pts] : folds) out.push_back(std::move(pts));
    return out;
}

std::vector<fs::path> render_reports(const fs::path& report_dir, const fs::path& out_dir) {
    if (!fs::is_directory(report_dir)) throw SpectraError("report directory not found: " + report_dir.string());
    std::vector<fs::path> cells;
    if (fs::exists(report_dir / "metrics.json")) cells.push_back(report_dir);
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(report_dir))
        if (e.is_directory() && fs::exists(e.path() / "metrics.json")) subdirs.push_back(e.path());
    std::sort(subdirs.begin(), subdirs.end());
    cells.insert(cells.end(), subdirs.begin(), subdirs.end());
    if (cells.empty()) throw SpectraError("no report files (metrics.json) under " + report_dir.string());

    const std::vector<std::string> order = {"FTIR",      "Raman",     "EEM",           "FTIR+Raman",
                                            "FTIR+EEM", "Raman+EEM", "FTIR+Raman+EEM"};
    auto rank = [&](const std::string& c) {
        const auto it = std::find(order.begin(), order.end(), c);
        return static_cast<std::size_t>(it - order.begin());
    };

    struct CellInfo {
        fs::path dir;
        std::string scenario, configuration;
        json metrics;
    };
    std::map<std::string, std::vector<CellInfo>> by_scenario;
    for (const auto& dir : cells) {
        CellInfo c{dir, "", "", read_json(dir / "metrics.json")};
        c.scenario = c.metrics.at("scenario").get<std::string>();
        c.configuration = c.metrics.at("configuration").get<std::string>();
        by_scenario[c.scenario].push_back(std::move(c));
    }

    fs::create_directories(out_dir);
    std::vector<fs::path> written;
    auto emit = [&](const fs::path& p, const std::string& svg) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw SpectraError("cannot write " + p.string());
        out << svg;
        written.push_back(p);
    };

    for (auto& [scenario, list] : by_scenario) {
        std::stable_sort(list.begin(), list.end(),
                         [&](const CellInfo& a, const CellInfo& b) { return rank(a.configuration) < rank(b.configuration); });
        std::vector<RocSeries> roc;
        std::vector<CurveSeries> curves;
        for (const auto& c : list) {
            const fs::path roc_file = c.dir / ("roc_" + scenario + "_" + c.configuration + ".csv");
            if (!fs::exists(roc_file)) throw SpectraError("missing report file " + roc_file.string());
            const auto& auc = c.metrics.at("auc");
            roc.push_back({c.configuration, eval::mean_roc(read_roc_csv(roc_file), 101), auc.at("mean").get<double>(),
                           auc.at("std").get<double>()});

            if (fs::exists(c.dir / "learning_curve.csv")) {
                const auto rows = read_csv(c.dir / "learning_curve.csv");
                CurveSeries cs{c.configuration, {}, {}, {}};
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    if (rows[i].size() != 4) throw SpectraError("malformed learning curve row");
                    cs.x.push_back(parse_double(rows[i][1]));
                    cs.y.push_back(parse_double(rows[i][2]));
                    cs.y_std.push_back(parse_double(rows[i][3]));
                }
                curves.push_back(std::move(cs));
            }

            for (const char* mod : {"FTIR", "Raman", "EEM"}) {
                const fs::path csv = c.dir / ("pca_" + std::string(mod) + ".csv");
                if (!fs::exists(csv)) continue;
                const json meta = read_json(c.dir / ("pca_" + std::string(mod) + ".json"));
                const auto var = meta.at("explained_variance_ratio").get<std::vector<double>>();
                const auto rows = read_csv(csv);
                std::vector<ScatterPoint> pts;
                for (std::size_t i = 1; i < rows.size(); ++i) {
                    if (rows[i].size() != 4) throw SpectraError("malformed PCA row");
                    pts.push_back({parse_double(rows[i][2]), parse_double(rows[i][3]), rows[i][1]});
                }
                emit(out_dir / ("pca_" + scenario + "_" + c.configuration + "_" + mod + ".svg"),
                     pca_svg(std::string(mod) + " PCA (" + scenario + ")", pts, var.size() > 0 ? var[0] : 0.0,
                             var.size() > 1 ? var[1] : 0.0));
            }
        }
        emit(out_dir / ("roc_" + scenario + ".svg"), roc_svg("Mean ROC (" + scenario + ")", roc));
        if (!curves.empty())
            emit(out_dir / ("learning_curve_" + scenario + ".svg"),
                 learning_curve_svg("Learning curve (" + scenario + ")", curves));
    }
    return written;
}

}  // namespace spectrafuse::plots
