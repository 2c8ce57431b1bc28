#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spectrafuse {

/// Base error for all data and preprocessing failures.
class SpectraError : public std::runtime_error {
public:
    explicit SpectraError(const std::string& what) : std::runtime_error(what) {}
};

enum class AxisUnit { Wavenumber, Wavelength };
enum class Modality { FTIR, Raman, EEM };
enum class Group { Breast, Colon, Control };
enum class Scenario { Breast, Colon };

/// Canonical fusion order.
inline constexpr Modality kAllModalities[] = {Modality::FTIR, Modality::Raman, Modality::EEM};

std::string_view to_string(Modality m);
std::string_view to_string(Group g);
std::string_view to_string(Scenario s);
Modality parse_modality(std::string_view s);
Group parse_group(std::string_view s);
Scenario parse_scenario(std::string_view s);

/// 1 = cancer, 0 = control.
inline int label_of(Group g) { return g == Group::Control ? 0 : 1; }

/// Whether a group takes part in a binary scenario (its cancer group or controls).
bool in_scenario(Group g, Scenario s);

/// Strictly increasing, finite axis with at least two nodes.
class SpectralAxis {
public:
    SpectralAxis(std::vector<double> values, AxisUnit unit);

    /// Uniform grid lo, lo+step, ... up to hi (inclusive within step*1e-9).
    static SpectralAxis uniform(double lo, double hi, double step, AxisUnit unit);

    const std::vector<double>& values() const { return values_; }
    AxisUnit unit() const { return unit_; }
    std::size_t size() const { return values_.size(); }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Mean spacing.
    double step() const;
    double median_step() const;
    /// True if every spacing deviates from the mean by at most rel_tol relative.
    bool is_uniform(double rel_tol = 1e-6) const;

    bool operator==(const SpectralAxis& other) const = default;

private:
    std::vector<double> values_;
    AxisUnit unit_;
};

struct Spectrum1D {
    Spectrum1D(SpectralAxis axis, std::vector<double> intensity);

    SpectralAxis axis;
    std::vector<double> intensity;

    std::size_t size() const { return intensity.size(); }
};

/// Fluorescence excitation x emission grid, row-major over excitation.
/// mask[i] = 1 marks a cell excluded by preprocessing.
class EEMatrix {
public:
    EEMatrix(SpectralAxis ex, SpectralAxis em, std::vector<double> grid);
    EEMatrix(SpectralAxis ex, SpectralAxis em, std::vector<double> grid, std::vector<std::uint8_t> mask);

    const SpectralAxis& ex_axis() const { return ex_; }
    const SpectralAxis& em_axis() const { return em_; }
    std::size_t rows() const { return ex_.size(); }
    std::size_t cols() const { return em_.size(); }

    double& at(std::size_t i, std::size_t j) { return grid_[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return grid_[i * cols() + j]; }
    bool masked(std::size_t i, std::size_t j) const { return mask_[i * cols() + j] != 0; }
    void set_masked(std::size_t i, std::size_t j) {
        mask_[i * cols() + j] = 1;
        grid_[i * cols() + j] = 0.0;
    }

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    std::size_t masked_count() const;

private:
    SpectralAxis ex_;
    SpectralAxis em_;
    std::vector<double> grid_;
    std::vector<std::uint8_t> mask_;
};

using Payload = std::variant<Spectrum1D, EEMatrix>;

struct SampleRecord {
    std::string patient_id;
    Group group;
    int replicate = 1;
    Payload payload;
    /// EEM only: solvent blank acquired for this sample.
    std::optional<EEMatrix> blank;

    int label() const { return label_of(group); }
    const Spectrum1D& spectrum() const { return std::get<Spectrum1D>(payload); }
    const EEMatrix& eem() const { return std::get<EEMatrix>(payload); }
};

struct SampleTable {
    Modality modality;
    std::vector<SampleRecord> records;

    /// Sorted distinct patient ids.
    std::vector<std::string> patients() const;
    /// Records of one patient ordered by replicate.
    std::vector<const SampleRecord*> records_of(std::string_view patient_id) const;
};

using Dataset = std::map<Modality, SampleTable>;

/// Linear interpolation of s onto target; target must lie inside s's range.
Spectrum1D resample_to_grid(const Spectrum1D& s, const SpectralAxis& target);

/// Puts every 1-D record of the table onto a common grid (intersection of
/// ranges at the coarsest median step). Tables already sharing one axis are
/// left untouched. EEM tables must already share identical axes.
void finalize_table(SampleTable& table);

/// Checks the table invariants: unique (patient, replicate), shared axes,
/// replicate rules per modality.
void validate_table(const SampleTable& table);

// CSV readers/writers. Numbers are written in shortest round-trip form.
Spectrum1D read_spectrum_csv(const std::filesystem::path& path, AxisUnit unit);
void write_spectrum_csv(const std::filesystem::path& path, const Spectrum1D& s);
EEMatrix read_eem_csv(const std::filesystem::path& path);
void write_eem_csv(const std::filesystem::path& path, const EEMatrix& m);

/// Loads a dataset.json manifest and every file it references.
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes dataset.json plus one CSV per payload under dir.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// FNV-1a 64-bit hash, used for cache keys.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace spectrafuse
