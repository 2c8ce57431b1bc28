#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "spectrafuse/core.hpp"

namespace spectrafuse::prep1d {

enum class ReplicateMode { Average, KeepAll };
enum class Region { Full, Fingerprint, Amide, Lipid, Nucleic };
enum class Baseline { None, Polynomial, Als };
enum class Scatter { None, Snv };
enum class Smoothing { None, SavitzkyGolay, MovingAverage };
enum class Derivative { None, First, Second, FirstAndSecond };
enum class Normalization { None, Area, L2, Max };

inline constexpr ReplicateMode kReplicateModes[] = {ReplicateMode::Average, ReplicateMode::KeepAll};
inline constexpr Region kRegions[] = {Region::Full, Region::Fingerprint, Region::Amide, Region::Lipid, Region::Nucleic};
inline constexpr Baseline kBaselines[] = {Baseline::None, Baseline::Polynomial, Baseline::Als};
inline constexpr Scatter kScatters[] = {Scatter::None, Scatter::Snv};
inline constexpr Smoothing kSmoothings[] = {Smoothing::None, Smoothing::SavitzkyGolay, Smoothing::MovingAverage};
inline constexpr Derivative kDerivatives[] = {Derivative::None, Derivative::First, Derivative::Second,
                                              Derivative::FirstAndSecond};
inline constexpr Normalization kNormalizations[] = {Normalization::None, Normalization::Area, Normalization::L2,
                                                    Normalization::Max};

/// Wavenumber bounds (cm^-1) of a region choice.
std::pair<double, double> region_bounds(Region r);

/// One FTIR preprocessing workflow. Field order is the canonical
/// enumeration order (replicate_mode outermost).
struct PipelineConfig {
    ReplicateMode replicate_mode = ReplicateMode::Average;
    Region region = Region::Full;
    Baseline baseline = Baseline::None;
    Scatter scatter = Scatter::None;
    Smoothing smoothing = Smoothing::None;
    Derivative derivative = Derivative::None;
    Normalization normalization = Normalization::None;

    bool operator==(const PipelineConfig&) const = default;

    /// Stable compact key, e.g. "keep_all/full/polynomial/snv/savitzky_golay/second/none".
    std::string key() const;
};

/// The pipeline chosen by the min-max FTIR search in the reference study.
PipelineConfig selected_ftir_pipeline();

// Option names as they appear in JSON and CSV reports.
std::string_view to_string(ReplicateMode v);
std::string_view to_string(Region v);
std::string_view to_string(Baseline v);
std::string_view to_string(Scatter v);
std::string_view to_string(Smoothing v);
std::string_view to_string(Derivative v);
std::string_view to_string(Normalization v);

/// JSON object with the seven option fields, e.g. {"baseline": "als", ...}.
nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_from_json(const nlohmann::json& j);

/// Operator parameters that the workflow choices do not cover.
struct OperatorSettings {
    int poly_degree = 3;
    int poly_max_iter = 100;
    double poly_tol = 1e-6;
    double als_lambda = 1e5;
    double als_p = 0.01;
    int als_iter = 10;
    int sg_window = 11;
    int sg_polyorder = 3;
    int ma_window = 9;
};

std::vector<double> average_vectors(std::span<const std::vector<double>> vectors);
Spectrum1D average_replicates(std::span<const Spectrum1D> records);

Spectrum1D select_region(const Spectrum1D& s, double lo, double hi);

/// ModPoly: iteratively clipped polynomial fit, returns s minus the fit.
Spectrum1D baseline_polynomial(const Spectrum1D& s, int degree = 3, int max_iter = 100, double tol = 1e-6);
/// The fitted polynomial baseline itself.
std::vector<double> polynomial_baseline_fit(const Spectrum1D& s, int degree, int max_iter, double tol);

struct AlsFit {
    std::vector<double> baseline;
    /// Weights used in the final solve.
    std::vector<double> weights;
};

/// Eilers asymmetric least squares with a second-difference penalty.
AlsFit als_fit(std::span<const double> y, double lambda, double p, int n_iter);
Spectrum1D baseline_als(const Spectrum1D& s, double lambda = 1e5, double p = 0.01, int n_iter = 10);

/// Solves (diag(w) + lambda * D'D) z = rhs for the second-difference
/// operator D, using a banded LDL' factorization.
std::vector<double> solve_penalized(std::span<const double> w, double lambda, std::span<const double> rhs);

/// Throws on zero variance; spread at or below 1e-9 * reference_scale (the
/// magnitude of the signal before baseline removal) also counts as zero.
Spectrum1D snv(const Spectrum1D& s, double reference_scale = 0.0);

/// Convolution weights of a Savitzky-Golay fit over `window` points that
/// evaluate the `deriv`-th derivative (unit spacing) at offset `pos` in [0, window).
std::vector<double> savgol_weights(int window, int polyorder, int deriv, int pos);

Spectrum1D savitzky_golay(const Spectrum1D& s, int window, int polyorder, int deriv);
Spectrum1D moving_average(const Spectrum1D& s, int window);

std::vector<double> derivative_block(const Spectrum1D& s, Derivative mode, int window, int polyorder);

/// Divides v by its area (sum |v_i| * dx), L2 norm or max |v_i|.
std::vector<double> normalize(std::span<const double> v, Normalization mode, double dx = 1.0);

/// Runs the configured operator chain on one patient's replicates.
/// KeepAll yields one vector per replicate, Average yields one.
std::vector<std::vector<double>> apply_pipeline(const PipelineConfig& cfg, std::span<const Spectrum1D> replicates,
                                                const OperatorSettings& ops = {});

/// Fixed Raman chain: 600-1800 cm^-1 window, ALS baseline, SNV.
std::vector<double> raman_pipeline(const Spectrum1D& s, const OperatorSettings& ops = {});

inline constexpr double kRamanLo = 600.0;
inline constexpr double kRamanHi = 1800.0;

}  // namespace spectrafuse::prep1d
