#include "spectrafuse/prep1d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace spectrafuse::prep1d {

namespace {

constexpr double kEps = 1e-12;
/// Spread below this fraction of the raw signal magnitude is round-off.
constexpr double kRelativeZero = 1e-9;

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void require_uniform(const SpectralAxis& axis) {
    if (!axis.is_uniform(1e-6)) throw SpectraError("non-uniform axis step");
}

Spectrum1D with_intensity(const Spectrum1D& s, std::vector<double> y) { return Spectrum1D(s.axis, std::move(y)); }

}  // namespace

std::pair<double, double> region_bounds(Region r) {
    switch (r) {
        case Region::Full: return {650.0, 4000.0};
        case Region::Fingerprint: return {900.0, 1800.0};
        case Region::Amide: return {1500.0, 1700.0};
        case Region::Lipid: return {2800.0, 3000.0};
        case Region::Nucleic: return {1000.0, 1250.0};
    }
    return {650.0, 4000.0};
}

std::string_view to_string(ReplicateMode v) { return v == ReplicateMode::Average ? "average" : "keep_all"; }

std::string_view to_string(Region v) {
    switch (v) {
        case Region::Full: return "full_650_4000";
        case Region::Fingerprint: return "fingerprint_900_1800";
        case Region::Amide: return "amide_1500_1700";
        case Region::Lipid: return "lipid_2800_3000";
        case Region::Nucleic: return "nucleic_1000_1250";
    }
    return "?";
}

std::string_view to_string(Baseline v) {
    switch (v) {
        case Baseline::None: return "none";
        case Baseline::Polynomial: return "polynomial";
        case Baseline::Als: return "als";
    }
    return "?";
}

std::string_view to_string(Scatter v) { return v == Scatter::None ? "none" : "snv"; }

std::string_view to_string(Smoothing v) {
    switch (v) {
        case Smoothing::None: return "none";
        case Smoothing::SavitzkyGolay: return "savitzky_golay";
        case Smoothing::MovingAverage: return "moving_average";
    }
    return "?";
}

std::string_view to_string(Derivative v) {
    switch (v) {
        case Derivative::None: return "none";
        case Derivative::First: return "first";
        case Derivative::Second: return "second";
        case Derivative::FirstAndSecond: return "first_and_second";
    }
    return "?";
}

std::string_view to_string(Normalization v) {
    switch (v) {
        case Normalization::None: return "none";
        case Normalization::Area: return "area";
        case Normalization::L2: return "l2";
        case Normalization::Max: return "max";
    }
    return "?";
}

std::string PipelineConfig::key() const {
    std::string k;
    for (std::string_view part : {to_string(replicate_mode), to_string(region), to_string(baseline), to_string(scatter),
                                  to_string(smoothing), to_string(derivative), to_string(normalization)}) {
        if (!k.empty()) k += '/';
        k += part;
    }
    return k;
}

namespace {

template <typename E, std::size_t N>
E parse_option(const nlohmann::json& j, const char* field, const E (&options)[N]) {
    if (!j.contains(field)) throw SpectraError(std::string("pipeline config lacks field '") + field + "'");
    const auto name = j.at(field).get<std::string>();
    for (E e : options)
        if (to_string(e) == name) return e;
    throw SpectraError("unknown " + std::string(field) + " option '" + name + "'");
}

}  // namespace

nlohmann::json to_json(const PipelineConfig& cfg) {
    return {{"replicate_mode", to_string(cfg.replicate_mode)}, {"region", to_string(cfg.region)},
            {"baseline", to_string(cfg.baseline)},             {"scatter", to_string(cfg.scatter)},
            {"smoothing", to_string(cfg.smoothing)},           {"derivative", to_string(cfg.derivative)},
            {"normalization", to_string(cfg.normalization)}};
}

PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SpectraError("pipeline config must be a JSON object");
    return {parse_option(j, "replicate_mode", kReplicateModes), parse_option(j, "region", kRegions),
            parse_option(j, "baseline", kBaselines),             parse_option(j, "scatter", kScatters),
            parse_option(j, "smoothing", kSmoothings),           parse_option(j, "derivative", kDerivatives),
            parse_option(j, "normalization", kNormalizations)};
}

PipelineConfig selected_ftir_pipeline() {
    return {ReplicateMode::KeepAll, Region::Full,         Baseline::Polynomial, Scatter::Snv,
            Smoothing::SavitzkyGolay, Derivative::Second, Normalization::None};
}

// ---------------------------------------------------------------------------

std::vector<double> average_vectors(std::span<const std::vector<double>> vectors) {
    if (vectors.empty()) throw SpectraError("cannot average an empty list");
    std::vector<double> mean(vectors.front().size(), 0.0);
    for (const auto& v : vectors) {
        if (v.size() != mean.size()) throw SpectraError("vector length mismatch");
        for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
    }
    const double n = static_cast<double>(vectors.size());
    for (double& m : mean) m /= n;
    return mean;
}

Spectrum1D average_replicates(std::span<const Spectrum1D> records) {
    if (records.empty()) throw SpectraError("cannot average an empty replicate list");
    std::vector<std::vector<double>> ys;
    for (const auto& r : records) {
        if (!(r.axis == records.front().axis)) throw SpectraError("replicate axis mismatch");
        ys.push_back(r.intensity);
    }
    return with_intensity(records.front(), average_vectors(ys));
}

Spectrum1D select_region(const Spectrum1D& s, double lo, double hi) {
    if (!(lo < hi)) throw SpectraError("region bounds must satisfy lo < hi");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.axis[i] >= lo && s.axis[i] <= hi) {
            x.push_back(s.axis[i]);
            y.push_back(s.intensity[i]);
        }
    }
    if (x.size() < 2) throw SpectraError("empty region window");
    return Spectrum1D(SpectralAxis(std::move(x), s.axis.unit()), std::move(y));
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<double> polynomial_baseline_fit(const Spectrum1D& s, int degree, int max_iter, double tol) {
    const auto n = static_cast<Eigen::Index>(s.size());
    if (degree < 1) throw SpectraError("polynomial degree must be >= 1");
    if (n <= degree + 1) throw SpectraError("spectrum too short for polynomial degree");
    const double a = s.axis.front(), b = s.axis.back();
    Eigen::MatrixXd vander(n, degree + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = (2.0 * s.axis[i] - (a + b)) / (b - a);
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= t) vander(i, k) = p;
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vander);
    if (qr.rank() < degree + 1) throw SpectraError("ill-conditioned polynomial fit");

    Eigen::VectorXd work = Eigen::Map<const Eigen::VectorXd>(s.intensity.data(), n);
    const double scale = std::max(1.0, work.cwiseAbs().maxCoeff());
    Eigen::VectorXd fit = vander * qr.solve(work);
    for (int it = 1; it < max_iter; ++it) {
        work = work.cwiseMin(fit);
        Eigen::VectorXd next = vander * qr.solve(work);
        const double change = (next - fit).cwiseAbs().maxCoeff();
        fit = std::move(next);
        if (change < tol * scale) break;
    }
    return {fit.data(), fit.data() + n};
}

Spectrum1D baseline_polynomial(const Spectrum1D& s, int degree, int max_iter, double tol) {
    const auto fit = polynomial_baseline_fit(s, degree, max_iter, tol);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.intensity[i] - fit[i];
    return with_intensity(s, std::move(out));
}

std::vector<double> solve_penalized(std::span<const double> w, double lambda, std::span<const double> rhs) {
    const std::size_t n = w.size();
    if (rhs.size() != n) throw SpectraError("penalized system size mismatch");
    // Bands of diag(w) + lambda * D'D.
    std::vector<double> d0(w.begin(), w.end()), d1(n, 0.0), d2(n, 0.0);
    constexpr double c[3] = {1.0, -2.0, 1.0};
    for (std::size_t k = 0; k + 2 < n; ++k) {
        for (int a = 0; a < 3; ++a) {
            d0[k + a] += lambda * c[a] * c[a];
            if (a + 1 < 3) d1[k + a] += lambda * c[a] * c[a + 1];
            if (a + 2 < 3) d2[k + a] += lambda * c[a] * c[a + 2];
        }
    }
    // LDL' with unit lower factor of bandwidth 2.
    std::vector<double> diag(n), l1(n, 0.0), l2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double di = d0[i];
        if (i >= 1) di -= l1[i - 1] * l1[i - 1] * diag[i - 1];
        if (i >= 2) di -= l2[i - 2] * l2[i - 2] * diag[i - 2];
        if (!(di > 0.0)) throw SpectraError("penalized system is not positive definite");
        diag[i] = di;
        if (i + 1 < n) {
            double v = d1[i];
            if (i >= 1) v -= l2[i - 1] * l1[i - 1] * diag[i - 1];
            l1[i] = v / di;
        }
        if (i + 2 < n) l2[i] = d2[i] / di;
    }
    std::vector<double> z(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 1) z[i] -= l1[i - 1] * z[i - 1];
        if (i >= 2) z[i] -= l2[i - 2] * z[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] /= diag[i];
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 < n) z[i] -= l1[i] * z[i + 1];
        if (i + 2 < n) z[i] -= l2[i] * z[i + 2];
    }
    return z;
}

AlsFit als_fit(std::span<const double> y, double lambda, double p, int n_iter) {
    if (!(lambda > 0.0)) throw SpectraError("ALS lambda must be > 0");
    if (!(p > 0.0 && p < 0.5)) throw SpectraError("ALS asymmetry p must lie in (0, 0.5)");
    if (n_iter < 1) throw SpectraError("ALS needs at least one iteration");
    for (double v : y)
        if (!std::isfinite(v)) throw SpectraError("non-finite input to ALS");
    const std::size_t n = y.size();
    std::vector<double> w(n, 1.0), wy(n), z;
    for (int it = 0; it < n_iter; ++it) {
        for (std::size_t i = 0; i < n; ++i) wy[i] = w[i] * y[i];
        z = solve_penalized(w, lambda, wy);
        if (it + 1 == n_iter) break;
        for (std::size_t i = 0; i < n; ++i) w[i] = y[i] > z[i] ? p : 1.0 - p;
    }
    return {std::move(z), std::move(w)};
}

Spectrum1D baseline_als(const Spectrum1D& s, double lambda, double p, int n_iter) {
    const auto fit = als_fit(s.intensity, lambda, p, n_iter);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.intensity[i] - fit.baseline[i];
    return with_intensity(s, std::move(out));
}

// ---------------------------------------------------------------------------
// Scatter, smoothing, derivatives

Spectrum1D snv(const Spectrum1D& s, double reference_scale) {
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.intensity.begin(), s.intensity.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : s.intensity) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > std::max(kEps, kRelativeZero * reference_scale))) throw SpectraError("SNV on zero-variance spectrum");
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (s.intensity[i] - mean) / sd;
    return with_intensity(s, std::move(out));
}

std::vector<double> savgol_weights(int window, int polyorder, int deriv, int pos) {
    if (window < 1 || window % 2 == 0) throw SpectraError("Savitzky-Golay window must be odd");
    if (polyorder >= window) throw SpectraError("Savitzky-Golay polyorder must be < window");
    if (deriv < 0 || deriv > polyorder) throw SpectraError("Savitzky-Golay deriv must be <= polyorder");
    Eigen::MatrixXd vander(window, polyorder + 1);
    for (int j = 0; j < window; ++j) {
        const double x = j - pos;
        double p = 1.0;
        for (int k = 0; k <= polyorder; ++k, p *= x) vander(j, k) = p;
    }
    // Row `deriv` of the least-squares solution operator, scaled by deriv!.
    const Eigen::MatrixXd gram = vander.transpose() * vander;
    const Eigen::MatrixXd solver = gram.ldlt().solve(vander.transpose());
    double fact = 1.0;
    for (int k = 2; k <= deriv; ++k) fact *= k;
    std::vector<double> w(window);
    for (int j = 0; j < window; ++j) w[j] = fact * solver(deriv, j);
    return w;
}

Spectrum1D savitzky_golay(const Spectrum1D& s, int window, int polyorder, int deriv) {
    require_uniform(s.axis);
    const int n = static_cast<int>(s.size());
    if (window > n) throw SpectraError("Savitzky-Golay window longer than spectrum");
    const int half = window / 2;
    const double scale = std::pow(s.axis.step(), deriv);
    const auto& y = s.intensity;
    std::vector<double> out(n);

    const auto center = savgol_weights(window, polyorder, deriv, half);
    for (int i = half; i < n - half; ++i) {
        double acc = 0.0;
        for (int j = 0; j < window; ++j) acc += center[j] * y[i - half + j];
        out[i] = acc / scale;
    }
    // Boundary points are evaluated from the polynomial fitted to the first
    // or last full window.
    for (int i = 0; i < half && i < n; ++i) {
        const auto left = savgol_weights(window, polyorder, deriv, i);
        const auto right = savgol_weights(window, polyorder, deriv, window - 1 - i);
        double acc_l = 0.0, acc_r = 0.0;
        for (int j = 0; j < window; ++j) {
            acc_l += left[j] * y[j];
            acc_r += right[j] * y[n - window + j];
        }
        out[i] = acc_l / scale;
        out[n - 1 - i] = acc_r / scale;
    }
    return with_intensity(s, std::move(out));
}

Spectrum1D moving_average(const Spectrum1D& s, int window) {
    const int n = static_cast<int>(s.size());
    if (window < 1 || window % 2 == 0) throw SpectraError("moving-average window must be odd");
    if (window > n) throw SpectraError("moving-average window longer than spectrum");
    const int half = window / 2;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
        double acc = 0.0;
        for (int j = lo; j <= hi; ++j) acc += s.intensity[j];
        out[i] = acc / (hi - lo + 1);
    }
    return with_intensity(s, std::move(out));
}

std::vector<double> derivative_block(const Spectrum1D& s, Derivative mode, int window, int polyorder) {
    switch (mode) {
        case Derivative::None: return s.intensity;
        case Derivative::First: return savitzky_golay(s, window, polyorder, 1).intensity;
        case Derivative::Second: return savitzky_golay(s, window, polyorder, 2).intensity;
        case Derivative::FirstAndSecond: {
            auto out = savitzky_golay(s, window, polyorder, 1).intensity;
            const auto d2 = savitzky_golay(s, window, polyorder, 2).intensity;
            out.insert(out.end(), d2.begin(), d2.end());
            return out;
        }
    }
    return s.intensity;
}

std::vector<double> normalize(std::span<const double> v, Normalization mode, double dx) {
    std::vector<double> out(v.begin(), v.end());
    double denom = 1.0;
    switch (mode) {
        case Normalization::None: return out;
        case Normalization::Area:
            denom = 0.0;
            for (double x : v) denom += std::abs(x);
            denom *= dx;
            break;
        case Normalization::L2:
            denom = 0.0;
            for (double x : v) denom += x * x;
            denom = std::sqrt(denom);
            break;
        case Normalization::Max:
            denom = 0.0;
            for (double x : v) denom = std::max(denom, std::abs(x));
            break;
    }
    if (!(denom > kEps)) throw SpectraError("normalization denominator is zero");
    for (double& x : out) x /= denom;
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<double>> apply_pipeline(const PipelineConfig& cfg, std::span<const Spectrum1D> replicates,
                                                const OperatorSettings& ops) {
    if (replicates.empty()) throw SpectraError("patient has no spectra");
    std::vector<Spectrum1D> inputs;
    if (cfg.replicate_mode == ReplicateMode::Average)
        inputs.push_back(average_replicates(replicates));
    else
        inputs.assign(replicates.begin(), replicates.end());

    const auto [lo, hi] = region_bounds(cfg.region);
    std::vector<std::vector<double>> out;
    out.reserve(inputs.size());
    for (const auto& raw : inputs) {
        Spectrum1D s = select_region(raw, lo, hi);
        const double scale = max_abs(s.intensity);
        if (cfg.baseline == Baseline::Polynomial)
            s = baseline_polynomial(s, ops.poly_degree, ops.poly_max_iter, ops.poly_tol);
        else if (cfg.baseline == Baseline::Als)
            s = baseline_als(s, ops.als_lambda, ops.als_p, ops.als_iter);
        if (cfg.scatter == Scatter::Snv) s = snv(s, scale);
        if (cfg.smoothing == Smoothing::SavitzkyGolay)
            s = savitzky_golay(s, ops.sg_window, ops.sg_polyorder, 0);
        else if (cfg.smoothing == Smoothing::MovingAverage)
            s = moving_average(s, ops.ma_window);
        auto v = derivative_block(s, cfg.derivative, ops.sg_window, ops.sg_polyorder);
        const double dx = cfg.derivative == Derivative::FirstAndSecond ? 1.0 : s.axis.step();
        out.push_back(normalize(v, cfg.normalization, dx));
    }
    return out;
}

std::vector<double> raman_pipeline(const Spectrum1D& s, const OperatorSettings& ops) {
    Spectrum1D r = select_region(s, kRamanLo, kRamanHi);
    const double scale = max_abs(r.intensity);
    r = baseline_als(r, ops.als_lambda, ops.als_p, ops.als_iter);
    return snv(r, scale).intensity;
}

}  // namespace spectrafuse::prep1d
