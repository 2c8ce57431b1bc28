#include "spectrafuse/synth.hpp"

#include <cmath>
#include <cstdio>

#include "spectrafuse/util.hpp"

namespace spectrafuse::synth {

using nlohmann::json;

namespace {

constexpr Group kGroups[] = {Group::Breast, Group::Colon, Group::Control};

Rng stream(const SynthSpec& spec, std::string_view tag, std::string_view id) {
    const std::uint64_t s = spec.seed;
    std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(&s), sizeof s));
    h = fnv1a(tag, h);
    h = fnv1a(":", h);
    return Rng(fnv1a(id, h));
}

double gauss(double x, double c, double w) {
    const double z = (x - c) / w;
    return std::exp(-0.5 * z * z);
}

/// Signed effect multiplier for each listed index: +, -, +, ...
std::vector<double> effect_vector(std::size_t n, const std::vector<int>& idx, double effect) {
    std::vector<double> e(n, 0.0);
    for (std::size_t k = 0; k < idx.size(); ++k) e[static_cast<std::size_t>(idx[k])] = (k % 2 == 0 ? 1.0 : -1.0) * effect;
    return e;
}

/// In complementary mode each patient's effect is split between FTIR (w) and
/// EEM (1 - w) with w ~ U(0, 1) shared by both modalities, half on average.
double modality_effect(const SynthSpec& spec, Modality m, std::string_view patient) {
    if (!spec.complementary) return spec.effect;
    if (m == Modality::Raman) return 0.0;
    const double w = stream(spec, "split", patient).uniform();
    return spec.effect * (m == Modality::FTIR ? w : 1.0 - w);
}

const std::vector<int>& disease_list(const SpectrumModel& model, Group g) {
    static const std::vector<int> none;
    if (g == Group::Breast) return model.breast_peaks;
    if (g == Group::Colon) return model.colon_peaks;
    return none;
}

const std::vector<int>& disease_list(const EemModel& model, Group g) {
    static const std::vector<int> none;
    if (g == Group::Breast) return model.breast_fluorophores;
    if (g == Group::Colon) return model.colon_fluorophores;
    return none;
}

/// Patients of group g holding a Raman (or EEM) measurement. Missing ids
/// are contiguous ranges chosen so that both missing sets overlap to give
/// exactly `all` patients with both.
bool available(const SynthSpec& spec, Group g, int index, Modality m) {
    const int n = spec.patients.at(g);
    const Availability& a = spec.availability.at(g);
    if (m == Modality::Raman) return index >= n - a.raman;
    if (m == Modality::EEM) return !(index >= a.eem - a.all && index < n - a.all);
    return true;
}

Spectrum1D render_1d(const SpectrumModel& model, const SpectralAxis& axis, const std::vector<double>& amplitudes,
                     Rng& rng, double scatter_jitter) {
    const double scale = 1.0 + scatter_jitter * rng.normal();
    double coef[3];
    for (int c = 0; c < 3; ++c) coef[c] = model.baseline[c] + model.baseline_jitter * rng.normal();
    const double ramp = model.ramp_amplitude * (1.0 + 0.1 * rng.normal());
    std::vector<double> y(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) {
        const double x = axis[i];
        double v = 0.0;
        for (std::size_t p = 0; p < model.peaks.size(); ++p)
            v += amplitudes[p] * gauss(x, model.peaks[p].center, model.peaks[p].width);
        v *= scale;
        const double t = (2.0 * x - (model.lo + model.hi)) / (model.hi - model.lo);
        v += coef[0] + coef[1] * t + coef[2] * t * t;
        if (model.ramp_amplitude != 0.0) v += ramp * std::exp(-(x - model.lo) / model.ramp_decay);
        v += model.noise * rng.normal();
        if (x < model.saturation_below) v = model.saturation_level;
        y[i] = v;
    }
    return Spectrum1D(axis, std::move(y));
}

json peaks_json(const std::vector<Peak>& peaks) {
    json a = json::array();
    for (const auto& p : peaks)
        a.push_back({{"center", p.center}, {"width", p.width}, {"amplitude", p.amplitude}, {"jitter", p.jitter}});
    return a;
}

json model_json(const SpectrumModel& m) {
    return {{"lo", m.lo},
            {"hi", m.hi},
            {"step", m.step},
            {"peaks", peaks_json(m.peaks)},
            {"breast_peaks", m.breast_peaks},
            {"colon_peaks", m.colon_peaks},
            {"noise", m.noise},
            {"scatter_jitter", m.scatter_jitter},
            {"baseline", {m.baseline[0], m.baseline[1], m.baseline[2]}},
            {"baseline_jitter", m.baseline_jitter},
            {"ramp_amplitude", m.ramp_amplitude},
            {"ramp_decay", m.ramp_decay},
            {"saturation_below", m.saturation_below},
            {"saturation_level", m.saturation_level}};
}

void model_from_json(const json& j, SpectrumModel& m) {
    m.lo = j.value("lo", m.lo);
    m.hi = j.value("hi", m.hi);
    m.step = j.value("step", m.step);
    if (j.contains("peaks")) {
        m.peaks.clear();
        for (const auto& p : j["peaks"])
            m.peaks.push_back({p.at("center").get<double>(), p.at("width").get<double>(),
                               p.at("amplitude").get<double>(), p.value("jitter", 0.0)});
    }
    m.breast_peaks = j.value("breast_peaks", m.breast_peaks);
    m.colon_peaks = j.value("colon_peaks", m.colon_peaks);
    m.noise = j.value("noise", m.noise);
    m.scatter_jitter = j.value("scatter_jitter", m.scatter_jitter);
    if (j.contains("baseline")) {
        const auto b = j["baseline"].get<std::vector<double>>();
        if (b.size() != 3) throw SpectraError("baseline needs 3 coefficients");
        for (int c = 0; c < 3; ++c) m.baseline[c] = b[c];
    }
    m.baseline_jitter = j.value("baseline_jitter", m.baseline_jitter);
    m.ramp_amplitude = j.value("ramp_amplitude", m.ramp_amplitude);
    m.ramp_decay = j.value("ramp_decay", m.ramp_decay);
    m.saturation_below = j.value("saturation_below", m.saturation_below);
    m.saturation_level = j.value("saturation_level", m.saturation_level);
}

void check_model(const SpectrumModel& m, const char* name) {
    if (!(m.hi > m.lo) || !(m.step > 0.0)) throw SpectraError(std::string(name) + ": invalid axis range");
    if (m.noise < 0.0 || m.scatter_jitter < 0.0 || m.baseline_jitter < 0.0)
        throw SpectraError(std::string(name) + ": noise parameters must be >= 0");
    if (!(m.ramp_decay > 0.0)) throw SpectraError(std::string(name) + ": ramp_decay must be > 0");
    for (const auto& p : m.peaks)
        if (!(p.width > 0.0) || p.jitter < 0.0) throw SpectraError(std::string(name) + ": peak widths must be > 0");
    for (const auto* list : {&m.breast_peaks, &m.colon_peaks})
        for (int i : *list)
            if (i < 0 || i >= static_cast<int>(m.peaks.size()))
                throw SpectraError(std::string(name) + ": disease peak index out of range");
}

}  // namespace

SynthSpec SynthSpec::table1() {
    SynthSpec s;
    s.patients = {{Group::Breast, 100}, {Group::Colon, 100}, {Group::Control, 100}};
    s.availability = {{Group::Breast, {98, 98, 97}}, {Group::Colon, {97, 98, 96}}, {Group::Control, {77, 80, 69}}};

    // Serum-like mid-IR absorbance bands.
    s.ftir.lo = 650.0;
    s.ftir.hi = 4000.0;
    s.ftir.step = 4.0;
    s.ftir.peaks = {{3290, 120, 0.45, 0.08}, {2960, 18, 0.10, 0.12}, {2925, 16, 0.12, 0.12}, {2855, 12, 0.06, 0.12},
                    {1740, 12, 0.05, 0.15}, {1650, 22, 0.90, 0.06}, {1545, 20, 0.55, 0.06}, {1450, 18, 0.12, 0.10},
                    {1395, 16, 0.14, 0.10}, {1240, 24, 0.18, 0.12}, {1080, 26, 0.20, 0.12}, {1030, 18, 0.08, 0.15}};
    s.ftir.breast_peaks = {10, 9};
    s.ftir.colon_peaks = {4, 2};
    s.ftir.noise = 0.002;
    s.ftir.scatter_jitter = 0.05;
    s.ftir.baseline[0] = 0.05;
    s.ftir.baseline[1] = -0.02;
    s.ftir.baseline[2] = 0.03;
    s.ftir.baseline_jitter = 0.02;

    // Raman shifts with a strong fluorescence background and low-shift saturation.
    s.raman.lo = 100.0;
    s.raman.hi = 3200.0;
    s.raman.step = 2.0;
    s.raman.peaks = {{760, 8, 0.20, 0.12},  {850, 9, 0.15, 0.12},  {1004, 5, 0.50, 0.08}, {1157, 6, 0.60, 0.15},
                     {1250, 12, 0.25, 0.10}, {1445, 10, 0.40, 0.08}, {1527, 7, 0.70, 0.15}, {1655, 12, 0.45, 0.08},
                     {2935, 20, 0.80, 0.08}};
    s.raman.breast_peaks = {3, 6};
    s.raman.colon_peaks = {2, 7};
    s.raman.noise = 0.01;
    s.raman.scatter_jitter = 0.05;
    s.raman.baseline[0] = 1.0;
    s.raman.baseline[1] = -0.4;
    s.raman.baseline[2] = 0.2;
    s.raman.baseline_jitter = 0.1;
    s.raman.ramp_amplitude = 4.0;
    s.raman.ramp_decay = 600.0;
    s.raman.saturation_below = 200.0;
    s.raman.saturation_level = 50.0;

    s.eem.fluorophores = {{280, 350, 12, 25, 1.00, 0.08},
                          {340, 455, 15, 30, 0.30, 0.15},
                          {450, 525, 15, 25, 0.20, 0.15},
                          {405, 630, 10, 15, 0.10, 0.15},
                          {320, 410, 15, 30, 0.25, 0.12}};
    s.eem.breast_fluorophores = {1, 3};
    s.eem.colon_fluorophores = {2, 4};
    s.eem.noise = 0.003;
    s.eem.rayleigh_amplitude = 20.0;
    s.eem.water_raman = 0.05;
    return s;
}

void SynthSpec::validate() const {
    for (Group g : kGroups) {
        if (!patients.count(g) || !availability.count(g)) throw SpectraError("spec lacks group settings");
        const int n = patients.at(g);
        const Availability& a = availability.at(g);
        if (n < 1) throw SpectraError("each group needs at least 1 patient");
        if (a.raman < 0 || a.raman > n || a.eem < 0 || a.eem > n)
            throw SpectraError("availability exceeds patient count");
        if (a.all > std::min(a.raman, a.eem) || a.all < a.raman + a.eem - n)
            throw SpectraError("inconsistent trimodal availability");
    }
    if (ftir_replicates < 1 || ftir_replicates > 3) throw SpectraError("ftir_replicates must lie in 1..3");
    if (replicate_jitter < 0.0) throw SpectraError("replicate_jitter must be >= 0");
    if (effect < 0.0) throw SpectraError("effect must be >= 0");
    check_model(ftir, "ftir");
    check_model(raman, "raman");
    if (eem.noise < 0.0 || !(eem.step > 0.0) || !(eem.rayleigh_sd > 0.0)) throw SpectraError("eem: invalid settings");
    for (const auto& f : eem.fluorophores)
        if (!(f.ex_width > 0.0) || !(f.em_width > 0.0) || f.jitter < 0.0)
            throw SpectraError("eem: fluorophore widths must be > 0");
    for (const auto* list : {&eem.breast_fluorophores, &eem.colon_fluorophores})
        for (int i : *list)
            if (i < 0 || i >= static_cast<int>(eem.fluorophores.size()))
                throw SpectraError("eem: disease fluorophore index out of range");
}

json SynthSpec::to_json() const {
    json pts, avail;
    for (Group g : kGroups) {
        pts[std::string(spectrafuse::to_string(g))] = patients.at(g);
        const auto& a = availability.at(g);
        avail[std::string(spectrafuse::to_string(g))] = {{"raman", a.raman}, {"eem", a.eem}, {"all", a.all}};
    }
    json fl = json::array();
    for (const auto& f : eem.fluorophores)
        fl.push_back({{"ex", f.ex},
                      {"em", f.em},
                      {"ex_width", f.ex_width},
                      {"em_width", f.em_width},
                      {"amplitude", f.amplitude},
                      {"jitter", f.jitter}});
    return {{"seed", seed},
            {"patients", pts},
            {"availability", avail},
            {"ftir_replicates", ftir_replicates},
            {"replicate_jitter", replicate_jitter},
            {"effect", effect},
            {"complementary", complementary},
            {"ftir", model_json(ftir)},
            {"raman", model_json(raman)},
            {"eem",
             {{"fluorophores", fl},
              {"breast_fluorophores", eem.breast_fluorophores},
              {"colon_fluorophores", eem.colon_fluorophores},
              {"noise", eem.noise},
              {"rayleigh_amplitude", eem.rayleigh_amplitude},
              {"rayleigh_sd", eem.rayleigh_sd},
              {"rayleigh_half_support", eem.rayleigh_half_support},
              {"blank_scatter_ratio", eem.blank_scatter_ratio},
              {"water_raman", eem.water_raman}}}};
}

SynthSpec SynthSpec::from_json(const json& j) {
    SynthSpec s = table1();
    try {
        s.seed = j.value("seed", s.seed);
        if (j.contains("patients"))
            for (const auto& [name, n] : j["patients"].items()) s.patients[parse_group(name)] = n.get<int>();
        if (j.contains("availability"))
            for (const auto& [name, a] : j["availability"].items())
                s.availability[parse_group(name)] = {a.at("raman").get<int>(), a.at("eem").get<int>(),
                                                     a.at("all").get<int>()};
        s.ftir_replicates = j.value("ftir_replicates", s.ftir_replicates);
        s.replicate_jitter = j.value("replicate_jitter", s.replicate_jitter);
        s.effect = j.value("effect", s.effect);
        s.complementary = j.value("complementary", s.complementary);
        if (j.contains("ftir")) model_from_json(j["ftir"], s.ftir);
        if (j.contains("raman")) model_from_json(j["raman"], s.raman);
        if (j.contains("eem")) {
            const json& e = j["eem"];
            if (e.contains("fluorophores")) {
                s.eem.fluorophores.clear();
                for (const auto& f : e["fluorophores"])
                    s.eem.fluorophores.push_back({f.at("ex").get<double>(), f.at("em").get<double>(),
                                                  f.at("ex_width").get<double>(), f.at("em_width").get<double>(),
                                                  f.at("amplitude").get<double>(), f.value("jitter", 0.0)});
            }
            s.eem.breast_fluorophores = e.value("breast_fluorophores", s.eem.breast_fluorophores);
            s.eem.colon_fluorophores = e.value("colon_fluorophores", s.eem.colon_fluorophores);
            s.eem.noise = e.value("noise", s.eem.noise);
            s.eem.rayleigh_amplitude = e.value("rayleigh_amplitude", s.eem.rayleigh_amplitude);
            s.eem.rayleigh_sd = e.value("rayleigh_sd", s.eem.rayleigh_sd);
            s.eem.rayleigh_half_support = e.value("rayleigh_half_support", s.eem.rayleigh_half_support);
            s.eem.blank_scatter_ratio = e.value("blank_scatter_ratio", s.eem.blank_scatter_ratio);
            s.eem.water_raman = e.value("water_raman", s.eem.water_raman);
        }
    } catch (const json::exception& e) {
        throw SpectraError(std::string("invalid synth spec: ") + e.what());
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------

std::vector<std::string> patient_ids(const SynthSpec& spec, Group g) {
    std::vector<std::string> ids;
    const int n = spec.patients.at(g);
    for (int i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s_%03d", std::string(spectrafuse::to_string(g)).c_str(), i + 1);
        ids.emplace_back(buf);
    }
    return ids;
}

SampleTable gen_1d(const SynthSpec& spec, Modality modality) {
    spec.validate();
    if (modality == Modality::EEM) throw SpectraError("gen_1d does not produce EEM data");
    const SpectrumModel& model = modality == Modality::FTIR ? spec.ftir : spec.raman;
    const SpectralAxis axis = SpectralAxis::uniform(model.lo, model.hi, model.step, AxisUnit::Wavenumber);
    const std::string tag(to_string(modality));
    SampleTable table{modality, {}};
    for (Group g : kGroups) {
        const auto ids = patient_ids(spec, g);
        for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
            if (!available(spec, g, i, modality)) continue;
            const auto shift = effect_vector(model.peaks.size(), disease_list(model, g),
                                             modality_effect(spec, modality, ids[i]));
            Rng rng = stream(spec, tag, ids[i]);
            std::vector<double> patient_amp(model.peaks.size());
            for (std::size_t p = 0; p < model.peaks.size(); ++p) {
                const Peak& pk = model.peaks[p];
                patient_amp[p] = pk.amplitude * (1.0 + pk.jitter * rng.normal() + shift[p]);
            }
            const int reps = modality == Modality::FTIR ? spec.ftir_replicates : 1;
            for (int r = 1; r <= reps; ++r) {
                std::vector<double> amp(patient_amp);
                for (double& a : amp) a *= 1.0 + spec.replicate_jitter * rng.normal();
                table.records.push_back(
                    {ids[i], g, r, render_1d(model, axis, amp, rng, model.scatter_jitter), std::nullopt});
            }
        }
    }
    return table;
}

SpectralAxis eem_ex_axis(const SynthSpec& spec) {
    return SpectralAxis::uniform(spec.eem.ex_lo, spec.eem.ex_hi, spec.eem.step, AxisUnit::Wavelength);
}

SpectralAxis eem_em_axis(const SynthSpec& spec) {
    return SpectralAxis::uniform(spec.eem.em_lo, spec.eem.em_hi, spec.eem.step, AxisUnit::Wavelength);
}

namespace {

double ridge(const EemModel& m, double ex, double em) {
    double v = 0.0;
    const double d1 = em - ex, d2 = em - 2.0 * ex;
    if (std::abs(d1) <= m.rayleigh_half_support) v += gauss(d1, 0.0, m.rayleigh_sd);
    if (std::abs(d2) <= m.rayleigh_half_support) v += 0.25 * gauss(d2, 0.0, m.rayleigh_sd);
    return v;
}

double water_raman(const EemModel& m, double ex, double em) {
    if (m.water_raman == 0.0) return 0.0;
    const double shifted = 1.0 / (1.0 / ex - 3400e-7);
    return m.water_raman * gauss(em, shifted, 5.0);
}

}  // namespace

SampleTable gen_eem(const SynthSpec& spec) {
    spec.validate();
    const EemModel& m = spec.eem;
    const SpectralAxis ex = eem_ex_axis(spec), em = eem_em_axis(spec);
    SampleTable table{Modality::EEM, {}};
    for (Group g : kGroups) {
        const auto ids = patient_ids(spec, g);
        for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
            if (!available(spec, g, i, Modality::EEM)) continue;
            const auto shift = effect_vector(m.fluorophores.size(), disease_list(m, g),
                                             modality_effect(spec, Modality::EEM, ids[i]));
            Rng rng = stream(spec, "EEM", ids[i]);
            std::vector<double> amp(m.fluorophores.size());
            for (std::size_t f = 0; f < amp.size(); ++f) {
                const Fluorophore& fl = m.fluorophores[f];
                amp[f] = fl.amplitude * (1.0 + fl.jitter * rng.normal() + shift[f]);
            }
            const double scatter = m.rayleigh_amplitude * (1.0 + 0.1 * rng.normal());
            std::vector<double> sample(ex.size() * em.size()), blank(sample.size());
            for (std::size_t a = 0; a < ex.size(); ++a) {
                for (std::size_t b = 0; b < em.size(); ++b) {
                    double fluo = 0.0;
                    if (em[b] > ex[a])
                        for (std::size_t f = 0; f < amp.size(); ++f) {
                            const Fluorophore& fl = m.fluorophores[f];
                            fluo += amp[f] * gauss(ex[a], fl.ex, fl.ex_width) * gauss(em[b], fl.em, fl.em_width);
                        }
                    const double r = ridge(m, ex[a], em[b]);
                    const double w = water_raman(m, ex[a], em[b]);
                    sample[a * em.size() + b] = fluo + scatter * r + w + m.noise * rng.normal();
                    blank[a * em.size() + b] = m.blank_scatter_ratio * scatter * r + w + m.noise * rng.normal();
                }
            }
            table.records.push_back(
                {ids[i], g, 1, EEMatrix(ex, em, std::move(sample)), EEMatrix(ex, em, std::move(blank))});
        }
    }
    return table;
}

Dataset generate(const SynthSpec& spec) {
    Dataset d;
    d.emplace(Modality::FTIR, gen_1d(spec, Modality::FTIR));
    d.emplace(Modality::Raman, gen_1d(spec, Modality::Raman));
    d.emplace(Modality::EEM, gen_eem(spec));
    for (auto& [_, table] : d) validate_table(table);
    return d;
}

std::vector<std::uint8_t> rayleigh_support(const SynthSpec& spec) {
    const SpectralAxis ex = eem_ex_axis(spec), em = eem_em_axis(spec);
    std::vector<std::uint8_t> out(ex.size() * em.size(), 0);
    for (std::size_t a = 0; a < ex.size(); ++a)
        for (std::size_t b = 0; b < em.size(); ++b) out[a * em.size() + b] = ridge(spec.eem, ex[a], em[b]) > 0.0;
    return out;
}

}  // namespace spectrafuse::synth
