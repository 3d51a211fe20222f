#pragma once

#include "roughcast/dataset.hpp"
#include "roughcast/nn/mlp.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace roughcast::mesh {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

Vec3 operator+(Vec3 a, Vec3 b);
Vec3 operator-(Vec3 a, Vec3 b);
Vec3 operator*(double s, Vec3 v);
double dot(Vec3 a, Vec3 b);
Vec3 cross(Vec3 a, Vec3 b);
double norm(Vec3 v);

using Triangle = std::array<std::uint32_t, 3>;

// Triangle soup: no vertex welding, so binary STL yields 3 vertices per facet.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<Vec3> source_normals; // one per triangle when the file had them

    std::size_t triangle_count() const { return triangles.size(); }
    // Throws Errc::validation on out-of-range indices, non-finite vertices or
    // an empty triangle list.
    void validate() const;
    std::array<Vec3, 2> bounding_box() const;
};

enum class MeshFormat { auto_detect, stl, stl_binary, stl_ascii, obj };

MeshFormat parse_mesh_format(std::string_view name);
std::string_view to_string(MeshFormat format);

// `name_hint` (file name) lets auto-detection fall back to OBJ by extension.
TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format = MeshFormat::auto_detect,
                        std::string_view name_hint = {});
TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format = MeshFormat::auto_detect);

// Binary STL with geometric normals; coordinates are stored as float32.
std::string write_stl_binary(const TriangleMesh& mesh);
std::string write_stl_ascii(const TriangleMesh& mesh, std::string_view name = "roughcast");

// Extrinsic rotations about fixed world axes, X then Y then Z (R = Rz Ry Rx),
// in degrees.
struct Orientation {
    double rx = 0.0;
    double ry = 0.0;
    double rz = 0.0;

    bool is_identity() const { return rx == 0.0 && ry == 0.0 && rz == 0.0; }
    bool operator==(const Orientation&) const = default;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(const Orientation& o);
Vec3 rotate(const Mat3& r, Vec3 v);

TriangleMesh apply_orientation(const TriangleMesh& mesh, const Orientation& o);

inline constexpr Vec3 kBuildDirection{0.0, 0.0, 1.0};
inline constexpr double kMaxModelAngle = 170.0;
inline constexpr double kDegenerateAreaFactor = 1e-12;

struct FacetDescriptor {
    std::size_t id = 0;
    Vec3 normal;              // unit, right-hand winding; zero when degenerate
    double area = 0.0;
    double inclination = 0.0; // degrees in [0, 180] against the build direction
    double model_angle = 0.0; // inclination clamped to [0, 170]
    bool clamped = false;
    bool degenerate = false;
};

std::vector<FacetDescriptor> facet_descriptors(const TriangleMesh& mesh, Vec3 build_direction = kBuildDirection);

double surface_area(const TriangleMesh& mesh);

struct ColorRange {
    bool automatic = true;
    double lo = 0.0;
    double hi = 0.0;

    static ColorRange fixed(double lo, double hi) { return {false, lo, hi}; }
};

using Rgb = std::array<std::uint8_t, 3>;

// Five-stop ramp blue -> cyan -> green -> yellow -> red over [lo, hi].
Rgb ramp_color(double value, double lo, double hi);

struct FacetPrediction {
    std::size_t id = 0;
    double angle_deg = 0.0;
    std::optional<double> ra; // empty for degenerate facets
    Rgb rgb{};
    bool clamped = false;
    bool degenerate = false;
    double area = 0.0;
};

struct FieldSummary {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double area_weighted_mean = 0.0;
    std::vector<double> histogram_edges;
    std::vector<std::size_t> histogram_counts;
    std::size_t facet_count = 0;
    std::size_t predicted_count = 0;
    std::size_t clamped_count = 0;
    std::size_t degenerate_count = 0;
};

struct RoughnessField {
    std::vector<FacetPrediction> facets;
    FieldSummary summary;
    data::ProcessParameters params;
    Orientation orientation;
    double color_lo = 0.0;
    double color_hi = 0.0;
};

inline constexpr std::size_t kHistogramBins = 20;

// Orients the mesh, derives per-facet inclinations, predicts Ra for every
// non-degenerate facet in one batch and colors the field.
RoughnessField predict_field(const nn::MlpModel& model, const TriangleMesh& mesh, const Orientation& orientation,
                             const data::ProcessParameters& params, const ColorRange& range = {});

nlohmann::json to_json(const RoughnessField& field);
// uint32 facet count, then one float32 Ra per facet (NaN for degenerate), little endian.
std::string field_sidecar(const RoughnessField& field);

nlohmann::json to_json(const data::ProcessParameters& p);
// Missing keys keep the value from `base`; unknown keys are rejected.
data::ProcessParameters params_from_json(const nlohmann::json& j, data::ProcessParameters base = {});
nlohmann::json to_json(const Orientation& o);
Orientation orientation_from_json(const nlohmann::json& j);

} // namespace roughcast::mesh
