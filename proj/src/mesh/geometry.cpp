#include "roughcast/error.hpp"
#include "roughcast/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace roughcast::mesh {

namespace {

// sin/cos in degrees, exact at multiples of 90.
std::pair<double, double> sincos_deg(double deg)
{
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    if (r == 0.0) return {0.0, 1.0};
    if (r == 90.0) return {1.0, 0.0};
    if (r == 180.0) return {0.0, -1.0};
    if (r == 270.0) return {-1.0, 0.0};
    const double rad = r * std::numbers::pi / 180.0;
    return {std::sin(rad), std::cos(rad)};
}

Mat3 multiply(const Mat3& a, const Mat3& b)
{
    Mat3 c{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    return c;
}

} // namespace

Mat3 rotation_matrix(const Orientation& o)
{
    if (!std::isfinite(o.rx) || !std::isfinite(o.ry) || !std::isfinite(o.rz)) {
        fail(Errc::validation, "orientation angles must be finite");
    }
    const auto [sx, cx] = sincos_deg(o.rx);
    const auto [sy, cy] = sincos_deg(o.ry);
    const auto [sz, cz] = sincos_deg(o.rz);
    const Mat3 rx{{{1.0, 0.0, 0.0}, {0.0, cx, -sx}, {0.0, sx, cx}}};
    const Mat3 ry{{{cy, 0.0, sy}, {0.0, 1.0, 0.0}, {-sy, 0.0, cy}}};
    const Mat3 rz{{{cz, -sz, 0.0}, {sz, cz, 0.0}, {0.0, 0.0, 1.0}}};
    return multiply(rz, multiply(ry, rx));
}

Vec3 rotate(const Mat3& r, Vec3 v)
{
    return {
        r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
        r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
        r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z,
    };
}

TriangleMesh apply_orientation(const TriangleMesh& mesh, const Orientation& o)
{
    const Mat3 r = rotation_matrix(o);
    TriangleMesh out = mesh;
    if (!o.is_identity()) {
        for (auto& v : out.vertices) {
            v = rotate(r, v);
        }
    }
    if (!out.source_normals.empty()) {
        for (std::size_t t = 0; t < out.triangles.size(); ++t) {
            const auto& tri = out.triangles[t];
            const Vec3 n = cross(out.vertices[tri[1]] - out.vertices[tri[0]],
                                 out.vertices[tri[2]] - out.vertices[tri[0]]);
            const double len = norm(n);
            out.source_normals[t] = len > 0.0 ? (1.0 / len) * n : Vec3{};
        }
    }
    return out;
}

std::vector<FacetDescriptor> facet_descriptors(const TriangleMesh& mesh, Vec3 build_direction)
{
    const double blen = norm(build_direction);
    if (!(blen > 0.0) || !std::isfinite(blen)) {
        fail(Errc::validation, "build direction must be a finite non-zero vector");
    }
    const Vec3 b = (1.0 / blen) * build_direction;
    const auto box = mesh.bounding_box();
    const Vec3 diag = box[1] - box[0];
    const double area_floor = kDegenerateAreaFactor * dot(diag, diag);

    std::vector<FacetDescriptor> out(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec3 a = mesh.vertices[tri[0]];
        const Vec3 c = cross(mesh.vertices[tri[1]] - a, mesh.vertices[tri[2]] - a);
        const double len = norm(c);
        auto& d = out[t];
        d.id = t;
        d.area = 0.5 * len;
        if (!(d.area >= area_floor) || len == 0.0) {
            d.degenerate = true;
            continue;
        }
        d.normal = (1.0 / len) * c;
        // atan2 form of acos(n.b): same angle, well conditioned near 0 and 180.
        const double rad = std::atan2(norm(cross(d.normal, b)), dot(d.normal, b));
        d.inclination = std::clamp(rad * 180.0 / std::numbers::pi, 0.0, 180.0);
        d.clamped = d.inclination > kMaxModelAngle;
        d.model_angle = d.clamped ? kMaxModelAngle : d.inclination;
    }
    return out;
}

double surface_area(const TriangleMesh& mesh)
{
    double total = 0.0;
    for (const auto& tri : mesh.triangles) {
        const Vec3 a = mesh.vertices[tri[0]];
        total += 0.5 * norm(cross(mesh.vertices[tri[1]] - a, mesh.vertices[tri[2]] - a));
    }
    return total;
}

} // namespace roughcast::mesh
