#include "spectrafuse/prepeem.hpp"

#include <cmath>

namespace spectrafuse::prepeem {

EEMatrix subtract_blank(const EEMatrix& sample, const EEMatrix& blank) {
    if (!(sample.ex_axis() == blank.ex_axis()) || !(sample.em_axis() == blank.em_axis()))
        throw SpectraError("blank axes do not match sample axes");
    std::vector<double> grid(sample.grid().size());
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = sample.mask()[k] ? 0.0 : sample.grid()[k] - blank.grid()[k];
    return EEMatrix(sample.ex_axis(), sample.em_axis(), std::move(grid), sample.mask());
}

EEMatrix mask_physical(const EEMatrix& m) {
    EEMatrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m.em_axis()[j] < m.ex_axis()[i]) out.set_masked(i, j);
    return out;
}

EEMatrix remove_rayleigh(const EEMatrix& m, double half_window) {
    if (!(half_window > 0.0)) throw SpectraError("Rayleigh half window must be > 0");
    EEMatrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double ex = m.ex_axis()[i];
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double em = m.em_axis()[j];
            if (std::abs(em - ex) <= half_window || std::abs(em - 2.0 * ex) <= half_window) out.set_masked(i, j);
        }
    }
    return out;
}

std::vector<double> flatten(const EEMatrix& m) {
    std::vector<double> v(m.grid().size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = m.mask()[k] ? 0.0 : m.grid()[k];
    return v;
}

std::vector<std::string> feature_names(const EEMatrix& m) {
    std::vector<std::string> names;
    names.reserve(m.rows() * m.cols());
    for (double ex : m.ex_axis().values())
        for (double em : m.em_axis().values()) names.push_back("(" + format_double(ex) + "," + format_double(em) + ")");
    return names;
}

EEMatrix reshape(const std::vector<double>& v, const SpectralAxis& ex, const SpectralAxis& em) {
    return EEMatrix(ex, em, v);
}

std::vector<double> eem_pipeline(const EEMatrix& sample, const EEMatrix& blank, double half_window) {
    return flatten(remove_rayleigh(mask_physical(subtract_blank(sample, blank)), half_window));
}

std::vector<double> eem_pipeline(const EEMatrix& sample, double half_window) {
    return flatten(remove_rayleigh(mask_physical(sample), half_window));
}

}  // namespace spectrafuse::prepeem
