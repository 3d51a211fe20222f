#include "roughcast/dataset.hpp"

#include "roughcast/doe.hpp"
#include "roughcast/error.hpp"
#include "roughcast/rng.hpp"
#include "roughcast/text.hpp"

#include <cmath>
#include <sstream>

namespace roughcast::data {

std::vector<std::string> feature_order()
{
    return {kFeatureNames.begin(), kFeatureNames.end()};
}

std::array<double, kProcessParameterCount> ProcessParameters::as_array() const
{
    return {layer_height, extrusion_temp, outer_wall_speed, infill_density, wall_thickness, bed_temp, fan_speed};
}

ProcessParameters ProcessParameters::from_array(std::span<const double> v)
{
    if (v.size() < kProcessParameterCount) {
        fail(Errc::schema, "process parameter vector needs 7 entries");
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

std::vector<std::string> ProcessParameters::invalid_fields() const
{
    std::vector<std::string> out;
    const auto values = as_array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] <= 0.0) {
            out.emplace_back(kFeatureNames[i]);
        }
    }
    return out;
}

bool ProcessParameters::within_design_range() const
{
    const auto factors = doe::study_factors();
    const auto values = as_array();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] < factors[i].levels[0] || values[i] > factors[i].levels[2]) {
            return false;
        }
    }
    return true;
}

std::array<double, kFeatureCount> MeasurementRecord::features() const
{
    const auto p = params.as_array();
    std::array<double, kFeatureCount> out{};
    std::copy(p.begin(), p.end(), out.begin());
    out[kFeatureCount - 1] = surface_angle;
    return out;
}

Matrix Dataset::features() const
{
    const auto idx = iota_indices(records.size());
    return features(idx);
}

Matrix Dataset::features(std::span<const std::size_t> indices) const
{
    Matrix out(indices.size(), kFeatureCount);
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto f = records.at(indices[r]).features();
        std::copy(f.begin(), f.end(), out.row(r).begin());
    }
    return out;
}

std::vector<double> Dataset::targets() const
{
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.ra);
    }
    return out;
}

std::vector<double> Dataset::targets(std::span<const std::size_t> indices) const
{
    std::vector<double> out;
    out.reserve(indices.size());
    for (auto i : indices) {
        out.push_back(records.at(i).ra);
    }
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
    Dataset out;
    out.source = source;
    out.records.reserve(indices.size());
    for (auto i : indices) {
        out.records.push_back(records.at(i));
    }
    return out;
}

Dataset parse_dataset(std::string_view csv, std::string source)
{
    const auto lines = text::split_lines(csv);
    if (lines.empty()) {
        fail(Errc::schema, source + ": missing header");
    }

    // Map header names onto the canonical column slots.
    std::array<std::size_t, kCsvColumns.size()> slot{};
    slot.fill(static_cast<std::size_t>(-1));
    const auto header = text::split(lines.front(), ',');
    for (std::size_t c = 0; c < header.size(); ++c) {
        const auto name = text::trim(header[c]);
        for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
            if (name == kCsvColumns[k]) {
                slot[k] = c;
            }
        }
    }
    std::string missing;
    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
        if (slot[k] == static_cast<std::size_t>(-1)) {
            missing += (missing.empty() ? "" : ", ") + std::string(kCsvColumns[k]);
        }
    }
    if (!missing.empty()) {
        throw Error(Errc::schema, source + ": missing column(s) " + missing, 1);
    }

    Dataset ds;
    ds.source = std::move(source);
    std::vector<std::string> problems;
    Errc first_code = Errc::parse;
    std::optional<std::size_t> first_line;

    auto note = [&](Errc code, std::size_t line, const std::string& what) {
        if (!first_line) {
            first_line = line;
            first_code = code;
        }
        problems.push_back("line " + std::to_string(line) + ": " + what);
    };

    for (std::size_t n = 1; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        if (text::trim(lines[n]).empty()) {
            continue;
        }
        const auto cells = text::split(lines[n], ',');
        if (cells.size() != header.size()) {
            note(Errc::schema, line_no,
                 "expected " + std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
            continue;
        }
        std::array<double, kCsvColumns.size()> values{};
        bool ok = true;
        for (std::size_t k = 1; k < kCsvColumns.size(); ++k) {
            const auto v = text::parse_double(cells[slot[k]]);
            if (!v) {
                note(Errc::parse, line_no,
                     "column " + std::string(kCsvColumns[k]) + ": non-numeric cell '" +
                         std::string(text::trim(cells[slot[k]])) + "'");
                ok = false;
                continue;
            }
            values[k] = *v;
        }
        if (!ok) {
            continue;
        }
        MeasurementRecord rec;
        rec.object_id = std::string(text::trim(cells[slot[0]]));
        rec.params = ProcessParameters::from_array(std::span<const double>(values).subspan(1, 7));
        rec.surface_angle = values[8];
        rec.ra = values[9];
        for (const auto& field : rec.params.invalid_fields()) {
            note(Errc::validation, line_no, field + " must be finite and positive");
            ok = false;
        }
        if (rec.surface_angle < kMinSurfaceAngle || rec.surface_angle > kMaxSurfaceAngle) {
            note(Errc::validation, line_no,
                 "surface_angle_deg " + text::format_double(rec.surface_angle) + " outside [0, 170]");
            ok = false;
        }
        if (!(rec.ra > 0.0)) {
            note(Errc::validation, line_no, "ra_um must be > 0");
            ok = false;
        }
        if (ok) {
            ds.records.push_back(std::move(rec));
        }
    }

    if (!problems.empty()) {
        std::string msg = ds.source + ": " + std::to_string(problems.size()) + " invalid row(s)";
        for (const auto& p : problems) {
            msg += "\n  " + p;
        }
        throw Error(first_code, msg, first_line);
    }
    if (ds.records.empty()) {
        fail(Errc::empty_dataset, ds.source + ": no data rows");
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path)
{
    return parse_dataset(text::read_file(path), path.string());
}

std::string dataset_to_csv(const std::vector<MeasurementRecord>& records, const std::vector<ExtraColumn>& extra)
{
    std::ostringstream out;
    for (std::size_t k = 0; k < kCsvColumns.size(); ++k) {
        out << (k ? "," : "") << kCsvColumns[k];
    }
    for (const auto& col : extra) {
        if (col.values.size() != records.size()) {
            fail(Errc::schema, "extra column '" + col.name + "' length mismatch");
        }
        out << ',' << col.name;
    }
    out << '\n';
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        out << rec.object_id;
        for (double v : rec.features()) {
            out << ',' << text::format_double(v);
        }
        out << ',' << text::format_double(rec.ra);
        for (const auto& col : extra) {
            out << ',' << col.values[r];
        }
        out << '\n';
    }
    return out.str();
}

} // namespace roughcast::data
