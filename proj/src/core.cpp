#include "spectrafuse/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spectrafuse {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::FTIR: return "FTIR";
        case Modality::Raman: return "Raman";
        case Modality::EEM: return "EEM";
    }
    return "?";
}

std::string_view to_string(Group g) {
    switch (g) {
        case Group::Breast: return "breast";
        case Group::Colon: return "colon";
        case Group::Control: return "control";
    }
    return "?";
}

std::string_view to_string(Scenario s) { return s == Scenario::Breast ? "breast" : "colon"; }

Modality parse_modality(std::string_view s) {
    for (Modality m : kAllModalities)
        if (s == to_string(m)) return m;
    throw SpectraError("unknown modality '" + std::string(s) + "'");
}

Group parse_group(std::string_view s) {
    for (Group g : {Group::Breast, Group::Colon, Group::Control})
        if (s == to_string(g)) return g;
    throw SpectraError("unknown group '" + std::string(s) + "'");
}

Scenario parse_scenario(std::string_view s) {
    if (s == "breast") return Scenario::Breast;
    if (s == "colon") return Scenario::Colon;
    throw SpectraError("unknown scenario '" + std::string(s) + "'");
}

bool in_scenario(Group g, Scenario s) {
    if (g == Group::Control) return true;
    return (g == Group::Breast) == (s == Scenario::Breast);
}

// ---------------------------------------------------------------------------
// Axis and payload types

SpectralAxis::SpectralAxis(std::vector<double> values, AxisUnit unit) : values_(std::move(values)), unit_(unit) {
    if (values_.size() < 2) throw SpectraError("axis needs at least 2 points");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) throw SpectraError("axis contains non-finite value");
        if (i > 0 && !(values_[i] > values_[i - 1])) throw SpectraError("axis not strictly increasing");
    }
}

SpectralAxis SpectralAxis::uniform(double lo, double hi, double step, AxisUnit unit) {
    if (!(step > 0.0) || !(hi > lo)) throw SpectraError("invalid uniform axis bounds");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::min(lo + static_cast<double>(i) * step, hi);
    // Clamping may collapse the last node onto hi; keep strict monotonicity.
    if (n >= 2 && !(v[n - 1] > v[n - 2])) v.pop_back();
    return SpectralAxis(std::move(v), unit);
}

double SpectralAxis::step() const {
    return (values_.back() - values_.front()) / static_cast<double>(values_.size() - 1);
}

double SpectralAxis::median_step() const {
    std::vector<double> d(values_.size() - 1);
    for (std::size_t i = 1; i < values_.size(); ++i) d[i - 1] = values_[i] - values_[i - 1];
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    return d[d.size() / 2];
}

bool SpectralAxis::is_uniform(double rel_tol) const {
    const double h = step();
    for (std::size_t i = 1; i < values_.size(); ++i)
        if (std::abs((values_[i] - values_[i - 1]) - h) > rel_tol * h) return false;
    return true;
}

Spectrum1D::Spectrum1D(SpectralAxis ax, std::vector<double> y) : axis(std::move(ax)), intensity(std::move(y)) {
    if (intensity.size() != axis.size()) throw SpectraError("intensity length does not match axis");
    for (double v : intensity)
        if (!std::isfinite(v)) throw SpectraError("non-finite intensity");
}

EEMatrix::EEMatrix(SpectralAxis ex, SpectralAxis em, std::vector<double> grid)
    : EEMatrix(std::move(ex), std::move(em), std::move(grid), {}) {}

EEMatrix::EEMatrix(SpectralAxis ex, SpectralAxis em, std::vector<double> grid, std::vector<std::uint8_t> mask)
    : ex_(std::move(ex)), em_(std::move(em)), grid_(std::move(grid)), mask_(std::move(mask)) {
    if (grid_.size() != ex_.size() * em_.size()) throw SpectraError("EEM grid shape does not match axes");
    if (mask_.empty()) mask_.assign(grid_.size(), 0);
    if (mask_.size() != grid_.size()) throw SpectraError("EEM mask shape does not match grid");
    for (std::size_t i = 0; i < grid_.size(); ++i)
        if (!mask_[i] && !std::isfinite(grid_[i])) throw SpectraError("non-finite EEM entry");
}

std::size_t EEMatrix::masked_count() const {
    return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<std::string> SampleTable::patients() const {
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.patient_id);
    return {ids.begin(), ids.end()};
}

std::vector<const SampleRecord*> SampleTable::records_of(std::string_view patient_id) const {
    std::vector<const SampleRecord*> out;
    for (const auto& r : records)
        if (r.patient_id == patient_id) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->replicate < b->replicate; });
    return out;
}

// ---------------------------------------------------------------------------
// Resampling and table finalization

Spectrum1D resample_to_grid(const Spectrum1D& s, const SpectralAxis& target) {
    const auto& x = s.axis.values();
    const double tol = 1e-9 * (x.back() - x.front());
    if (target.front() < x.front() - tol || target.back() > x.back() + tol)
        throw SpectraError("target axis extends beyond source range");
    std::vector<double> out(target.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double t = std::clamp(target[i], x.front(), x.back());
        while (j + 2 < x.size() && x[j + 1] < t) ++j;
        const double x0 = x[j], x1 = x[j + 1];
        if (t == x0) {
            out[i] = s.intensity[j];
        } else if (t == x1) {
            out[i] = s.intensity[j + 1];
        } else {
            const double w = (t - x0) / (x1 - x0);
            out[i] = s.intensity[j] + w * (s.intensity[j + 1] - s.intensity[j]);
        }
    }
    return Spectrum1D(target, std::move(out));
}

void finalize_table(SampleTable& table) {
    if (table.records.empty()) return;
    if (table.modality == Modality::EEM) {
        validate_table(table);
        return;
    }
    const SpectralAxis& first = table.records.front().spectrum().axis;
    const bool shared = std::all_of(table.records.begin(), table.records.end(),
                                    [&](const SampleRecord& r) { return r.spectrum().axis == first; });
    if (!shared) {
        double lo = -INFINITY, hi = INFINITY, step = 0.0;
        for (const auto& r : table.records) {
            const auto& ax = r.spectrum().axis;
            lo = std::max(lo, ax.front());
            hi = std::min(hi, ax.back());
            step = std::max(step, ax.median_step());
        }
        if (!(hi > lo)) throw SpectraError("spectra of " + std::string(to_string(table.modality)) + " do not overlap");
        const SpectralAxis grid = SpectralAxis::uniform(lo, hi, step, first.unit());
        for (auto& r : table.records) r.payload = resample_to_grid(r.spectrum(), grid);
    }
    validate_table(table);
}

void validate_table(const SampleTable& table) {
    std::set<std::pair<std::string, int>> seen;
    std::map<std::string, Group> group_of;
    for (const auto& r : table.records) {
        if (r.replicate < 1) throw SpectraError("replicate must be >= 1 for patient " + r.patient_id);
        if (!seen.emplace(r.patient_id, r.replicate).second)
            throw SpectraError("duplicate (patient, replicate) for patient " + r.patient_id);
        auto [it, inserted] = group_of.emplace(r.patient_id, r.group);
        if (!inserted && it->second != r.group) throw SpectraError("patient " + r.patient_id + " has mixed groups");
        if (table.modality == Modality::FTIR) {
            if (r.replicate > 3) throw SpectraError("FTIR allows at most 3 replicates per patient");
        } else if (r.replicate != 1) {
            throw SpectraError(std::string(to_string(table.modality)) + " allows exactly one record per patient");
        }
        const bool is_eem = std::holds_alternative<EEMatrix>(r.payload);
        if (is_eem != (table.modality == Modality::EEM)) throw SpectraError("payload type does not match modality");
    }
    if (table.records.empty()) return;
    const auto& head = table.records.front();
    for (const auto& r : table.records) {
        if (table.modality == Modality::EEM) {
            const auto& a = head.eem();
            const auto& b = r.eem();
            if (!(a.ex_axis() == b.ex_axis()) || !(a.em_axis() == b.em_axis()))
                throw SpectraError("EEM records do not share axes");
            if (r.blank && (!(r.blank->ex_axis() == b.ex_axis()) || !(r.blank->em_axis() == b.em_axis())))
                throw SpectraError("EEM blank axes differ from sample for patient " + r.patient_id);
        } else if (!(r.spectrum().axis == head.spectrum().axis)) {
            throw SpectraError("records do not share one axis");
        }
    }
}

// ---------------------------------------------------------------------------
// Number formatting

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SpectraError("malformed number '" + std::string(s) + "'");
    return v;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h) {
    return fnv1a(std::string_view(reinterpret_cast<const char*>(values.data()), values.size_bytes()), h);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw SpectraError("cannot open file " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpectraError("cannot write file " + path.string());
    out << content;
}

}  // namespace

Spectrum1D read_spectrum_csv(const fs::path& path, AxisUnit unit) {
    const auto lines = read_lines(path);
    if (lines.size() < 3) throw SpectraError("malformed CSV " + path.string() + ": need header and >= 2 rows");
    std::vector<double> x, y;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_commas(lines[i]);
        if (cells.size() != 2)
            throw SpectraError("malformed CSV " + path.string() + " line " + std::to_string(i + 1));
        try {
            x.push_back(parse_double(cells[0]));
            y.push_back(parse_double(cells[1]));
        } catch (const SpectraError& e) {
            throw SpectraError("malformed CSV " + path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    try {
        return Spectrum1D(SpectralAxis(std::move(x), unit), std::move(y));
    } catch (const SpectraError& e) {
        throw SpectraError(path.string() + ": " + e.what());
    }
}

void write_spectrum_csv(const fs::path& path, const Spectrum1D& s) {
    std::string out = "axis,intensity\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.axis[i]);
        out += ',';
        out += format_double(s.intensity[i]);
        out += '\n';
    }
    write_file(path, out);
}

EEMatrix read_eem_csv(const fs::path& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 3) throw SpectraError("malformed EEM CSV " + path.string());
    try {
        const auto header = split_commas(lines[0]);
        std::vector<double> em;
        for (std::size_t j = 1; j < header.size(); ++j) em.push_back(parse_double(header[j]));
        std::vector<double> ex, grid;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto cells = split_commas(lines[i]);
            if (cells.size() != em.size() + 1)
                throw SpectraError("row " + std::to_string(i + 1) + " has wrong number of columns");
            ex.push_back(parse_double(cells[0]));
            for (std::size_t j = 1; j < cells.size(); ++j) grid.push_back(parse_double(cells[j]));
        }
        return EEMatrix(SpectralAxis(std::move(ex), AxisUnit::Wavelength),
                        SpectralAxis(std::move(em), AxisUnit::Wavelength), std::move(grid));
    } catch (const SpectraError& e) {
        throw SpectraError("malformed EEM CSV " + path.string() + ": " + e.what());
    }
}

void write_eem_csv(const fs::path& path, const EEMatrix& m) {
    std::string out = "ex\\em";
    for (double e : m.em_axis().values()) out += ',' + format_double(e);
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += format_double(m.ex_axis()[i]);
        for (std::size_t j = 0; j < m.cols(); ++j) out += ',' + format_double(m.at(i, j));
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Manifest

Dataset load_dataset(const fs::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw SpectraError("cannot open manifest " + manifest_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw SpectraError("manifest is not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object() || !doc.contains("modalities") || !doc["modalities"].is_object())
        throw SpectraError("manifest lacks a 'modalities' object");
    const fs::path base = manifest_path.parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path f(p);
        return f.is_absolute() ? f : base / f;
    };

    Dataset dataset;
    for (const auto& [name, entries] : doc["modalities"].items()) {
        const Modality m = parse_modality(name);
        if (!entries.is_array()) throw SpectraError("modality " + name + " must list entries");
        SampleTable table{m, {}};
        for (const auto& e : entries) {
            try {
                const fs::path file = resolve(e.at("file").get<std::string>());
                std::optional<EEMatrix> blank;
                if (m == Modality::EEM && e.contains("blank")) blank = read_eem_csv(resolve(e.at("blank").get<std::string>()));
                Payload payload = m == Modality::EEM ? Payload(read_eem_csv(file))
                                                     : Payload(read_spectrum_csv(file, AxisUnit::Wavenumber));
                SampleRecord rec{e.at("patient_id").get<std::string>(), parse_group(e.at("group").get<std::string>()),
                                 e.value("replicate", 1), std::move(payload), std::move(blank)};
                table.records.push_back(std::move(rec));
            } catch (const json::exception& ex) {
                throw SpectraError("malformed manifest entry in " + name + ": " + ex.what());
            }
        }
        finalize_table(table);
        dataset.emplace(m, std::move(table));
    }
    return dataset;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    json modalities = json::object();
    for (const auto& [m, table] : dataset) {
        json entries = json::array();
        const std::string mod(to_string(m));
        for (const auto& r : table.records) {
            const std::string stem = mod + "/" + r.patient_id + "_r" + std::to_string(r.replicate);
            json e = {{"patient_id", r.patient_id},
                      {"group", std::string(to_string(r.group))},
                      {"replicate", r.replicate},
                      {"file", stem + ".csv"}};
            if (m == Modality::EEM) {
                write_eem_csv(dir / (stem + ".csv"), r.eem());
                if (r.blank) {
                    e["blank"] = stem + "_blank.csv";
                    write_eem_csv(dir / (stem + "_blank.csv"), *r.blank);
                }
            } else {
                write_spectrum_csv(dir / (stem + ".csv"), r.spectrum());
            }
            entries.push_back(std::move(e));
        }
        modalities[mod] = std::move(entries);
    }
    write_file(dir / "dataset.json", json{{"modalities", modalities}}.dump(2) + "\n");
}

}  // namespace spectrafuse
