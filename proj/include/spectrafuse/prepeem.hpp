#pragma once

#include <string>
#include <vector>

#include "spectrafuse/core.hpp"

namespace spectrafuse::prepeem {

inline constexpr double kRayleighHalfWindow = 25.0;

EEMatrix subtract_blank(const EEMatrix& sample, const EEMatrix& blank);

/// Zeroes and masks cells with emission < excitation.
EEMatrix mask_physical(const EEMatrix& m);

/// Zeroes and masks first- and second-order Rayleigh bands:
/// |em - ex| <= half_window or |em - 2 ex| <= half_window.
EEMatrix remove_rayleigh(const EEMatrix& m, double half_window = kRayleighHalfWindow);

/// Row-major (excitation-major) vector; masked cells are 0.
std::vector<double> flatten(const EEMatrix& m);
/// "(ex,em)" label per flattened position.
std::vector<std::string> feature_names(const EEMatrix& m);
/// Inverse of flatten for a vector on m's axes (mask cleared).
EEMatrix reshape(const std::vector<double>& v, const SpectralAxis& ex, const SpectralAxis& em);

/// Blank subtraction, physical mask, Rayleigh removal, flatten.
std::vector<double> eem_pipeline(const EEMatrix& sample, const EEMatrix& blank,
                                 double half_window = kRayleighHalfWindow);
/// Same chain without a blank.
std::vector<double> eem_pipeline(const EEMatrix& sample, double half_window = kRayleighHalfWindow);

}  // namespace spectrafuse::prepeem
