#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

#include "spectrafuse/core.hpp"

namespace spectrafuse::synth {

/// Gaussian band; jitter is the relative sd of the per-patient amplitude.
struct Peak {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
    double jitter = 0.0;
};

/// 2-D Gaussian fluorophore, emitting only at em > ex.
struct Fluorophore {
    double ex = 0.0;
    double em = 0.0;
    double ex_width = 1.0;
    double em_width = 1.0;
    double amplitude = 1.0;
    double jitter = 0.0;
};

struct SpectrumModel {
    double lo = 0.0, hi = 1.0, step = 1.0;
    std::vector<Peak> peaks;
    /// Indices into peaks carrying the class effect, per cancer group.
    std::vector<int> breast_peaks, colon_peaks;
    double noise = 0.0;
    /// Relative sd of a per-acquisition multiplicative scale.
    double scatter_jitter = 0.0;
    /// Polynomial baseline c0 + c1 t + c2 t^2 over t in [-1, 1]; each
    /// coefficient jittered by baseline_jitter (absolute sd) per acquisition.
    double baseline[3] = {0.0, 0.0, 0.0};
    double baseline_jitter = 0.0;
    /// Exponential fluorescence ramp a * exp(-(x - lo) / decay).
    double ramp_amplitude = 0.0;
    double ramp_decay = 1.0;
    /// Detector saturation: values below this axis position are held at saturation_level.
    double saturation_below = -1.0;
    double saturation_level = 0.0;
};

struct EemModel {
    double ex_lo = 250.0, ex_hi = 520.0, em_lo = 270.0, em_hi = 750.0, step = 5.0;
    std::vector<Fluorophore> fluorophores;
    std::vector<int> breast_fluorophores, colon_fluorophores;
    double noise = 0.0;
    double rayleigh_amplitude = 0.0;
    double rayleigh_sd = 3.0;
    /// Planted ridge cells satisfy |em - ex| <= half or |em - 2 ex| <= half.
    double rayleigh_half_support = 12.0;
    /// Ridge amplitude in the blank relative to the sample.
    double blank_scatter_ratio = 0.9;
    double water_raman = 0.0;
};

struct Availability {
    int raman = 0;
    int eem = 0;
    int all = 0;  ///< patients with both Raman and EEM
};

struct SynthSpec {
    std::uint64_t seed = 1;
    std::map<Group, int> patients;
    std::map<Group, Availability> availability;
    int ftir_replicates = 3;
    /// Relative sd of per-replicate amplitude jitter around the patient's amplitudes.
    double replicate_jitter = 0.01;
    /// Class effect: disease bands move by effect * amplitude (alternating sign).
    double effect = 1.0;
    /// Splits the effect per patient: w * effect in FTIR bands, (1 - w) * effect in
    /// EEM fluorophores with w ~ U(0, 1), none in Raman.
    bool complementary = false;
    SpectrumModel ftir;
    SpectrumModel raman;
    EemModel eem;

    /// Cohort shaped like the reference study: 100 patients per group,
    /// Raman 98/97/77 and EEM 98/98/80 available, trimodal 97/96/69.
    static SynthSpec table1();

    void validate() const;
    nlohmann::json to_json() const;
    /// Fields missing from j keep their table1() defaults.
    static SynthSpec from_json(const nlohmann::json& j);
};

/// Patient ids of a group, e.g. "breast_001".
std::vector<std::string> patient_ids(const SynthSpec& spec, Group g);

/// FTIR or Raman table; FTIR carries ftir_replicates acquisitions per patient.
SampleTable gen_1d(const SynthSpec& spec, Modality modality);
/// EEM table with a solvent blank per record.
SampleTable gen_eem(const SynthSpec& spec);
Dataset generate(const SynthSpec& spec);

/// Cells covered by planted Rayleigh ridges (row-major).
std::vector<std::uint8_t> rayleigh_support(const SynthSpec& spec);
SpectralAxis eem_ex_axis(const SynthSpec& spec);
SpectralAxis eem_em_axis(const SynthSpec& spec);

}  // namespace spectrafuse::synth
