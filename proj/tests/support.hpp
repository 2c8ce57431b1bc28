#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spectrafuse/core.hpp"
#include "spectrafuse/util.hpp"

namespace testing {

inline std::vector<double> random_vector(spectrafuse::Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline spectrafuse::Spectrum1D make_spectrum(double lo, double hi, double step, const auto& f) {
    auto axis = spectrafuse::SpectralAxis::uniform(lo, hi, step, spectrafuse::AxisUnit::Wavenumber);
    std::vector<double> y(axis.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = f(axis[i]);
    return spectrafuse::Spectrum1D(axis, y);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("spectrafuse_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
