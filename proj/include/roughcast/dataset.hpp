#pragma once

#include "roughcast/matrix.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roughcast::data {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::size_t kProcessParameterCount = 7;

// Canonical model input order. Every scaler, model and CGAN condition vector
// uses exactly this order.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "layer_height",  "extrusion_temp", "outer_wall_speed", "infill_density",
    "wall_thickness", "bed_temp",      "fan_speed",        "surface_angle",
};

std::vector<std::string> feature_order();

inline constexpr double kMinSurfaceAngle = 0.0;
inline constexpr double kMaxSurfaceAngle = 170.0;

struct ProcessParameters {
    double layer_height = 0.0;     // mm
    double extrusion_temp = 0.0;   // degC
    double outer_wall_speed = 0.0; // mm/s
    double infill_density = 0.0;   // %
    double wall_thickness = 0.0;   // mm
    double bed_temp = 0.0;         // degC
    double fan_speed = 0.0;        // %

    std::array<double, kProcessParameterCount> as_array() const;
    static ProcessParameters from_array(std::span<const double> values);

    // Names of fields that are not finite and strictly positive.
    std::vector<std::string> invalid_fields() const;
    // Inside the [low, high] level range of the study design for every field.
    bool within_design_range() const;

    bool operator==(const ProcessParameters&) const = default;
};

struct MeasurementRecord {
    std::string object_id;
    ProcessParameters params;
    double surface_angle = 0.0; // degrees in [0, 170]
    double ra = 0.0;            // um, > 0

    std::array<double, kFeatureCount> features() const;
};

struct Dataset {
    std::vector<MeasurementRecord> records;
    std::string source;

    std::size_t size() const { return records.size(); }
    Matrix features() const;
    Matrix features(std::span<const std::size_t> indices) const;
    std::vector<double> targets() const;
    std::vector<double> targets(std::span<const std::size_t> indices) const;
    Dataset subset(std::span<const std::size_t> indices) const;
};

// CSV column names, in file order.
inline constexpr std::array<std::string_view, 10> kCsvColumns = {
    "object_id",          "layer_height_mm", "extrusion_temp_c", "outer_wall_speed_mm_s", "infill_density_pct",
    "wall_thickness_mm",  "bed_temp_c",      "fan_speed_pct",    "surface_angle_deg",     "ra_um",
};

// Parses and validates a measurement table. All row-level problems are
// collected; the thrown Error lists every offending line.
Dataset parse_dataset(std::string_view csv, std::string source = "<memory>");
Dataset load_dataset(const std::filesystem::path& path);

struct ExtraColumn {
    std::string name;
    std::vector<std::string> values;
};

std::string dataset_to_csv(const std::vector<MeasurementRecord>& records, const std::vector<ExtraColumn>& extra = {});

} // namespace roughcast::data
