#include "roughcast/error.hpp"
#include "roughcast/mesh.hpp"
#include "roughcast/text.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>

namespace roughcast::mesh {

static_assert(std::endian::native == std::endian::little, "STL I/O assumes a little-endian host");

namespace {

constexpr std::size_t kStlHeader = 80;
constexpr std::size_t kStlRecord = 50;

std::vector<std::string_view> words(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

bool looks_like_text(std::string_view bytes)
{
    const auto head = bytes.substr(0, std::min<std::size_t>(bytes.size(), 1024));
    return std::none_of(head.begin(), head.end(), [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u == 0 || (u < 0x20 && u != '\t' && u != '\n' && u != '\r' && u != '\f' && u != '\v');
    });
}

bool starts_with_solid(std::string_view bytes)
{
    const auto t = text::trim(bytes.substr(0, std::min<std::size_t>(bytes.size(), 256)));
    return t.substr(0, 5) == "solid" && (t.size() == 5 || std::isspace(static_cast<unsigned char>(t[5])));
}

std::uint32_t read_u32(const char* p)
{
    std::uint32_t v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

float read_f32(const char* p)
{
    float v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

void put_u32(std::string& out, std::uint32_t v)
{
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void put_f32(std::string& out, float v)
{
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

bool binary_size_consistent(std::string_view bytes)
{
    if (bytes.size() < kStlHeader + 4) {
        return false;
    }
    const std::uint64_t count = read_u32(bytes.data() + kStlHeader);
    return kStlHeader + 4 + count * kStlRecord == bytes.size();
}

TriangleMesh parse_stl_binary(std::string_view bytes)
{
    if (bytes.size() < kStlHeader + 4) {
        fail(Errc::corrupt_file, "binary STL shorter than its 84-byte header (" + std::to_string(bytes.size()) +
                                     " bytes)");
    }
    const std::uint64_t count = read_u32(bytes.data() + kStlHeader);
    const std::uint64_t expected = kStlHeader + 4 + count * kStlRecord;
    if (expected != bytes.size()) {
        fail(Errc::corrupt_file, "binary STL declares " + std::to_string(count) + " triangles (" +
                                     std::to_string(expected) + " bytes) but the file has " +
                                     std::to_string(bytes.size()) + " bytes");
    }
    TriangleMesh mesh;
    mesh.vertices.reserve(count * 3);
    mesh.triangles.reserve(count);
    mesh.source_normals.reserve(count);
    const char* p = bytes.data() + kStlHeader + 4;
    for (std::uint64_t t = 0; t < count; ++t, p += kStlRecord) {
        mesh.source_normals.push_back({read_f32(p), read_f32(p + 4), read_f32(p + 8)});
        const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
        for (int k = 0; k < 3; ++k) {
            const char* q = p + 12 + 12 * k;
            const Vec3 v{read_f32(q), read_f32(q + 4), read_f32(q + 8)};
            if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
                fail(Errc::corrupt_file, "binary STL triangle " + std::to_string(t) + " has a non-finite vertex");
            }
            mesh.vertices.push_back(v);
        }
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    return mesh;
}

std::optional<Vec3> parse_xyz(const std::vector<std::string_view>& w, std::size_t first)
{
    if (w.size() < first + 3) {
        return std::nullopt;
    }
    const auto x = text::parse_double(w[first]);
    const auto y = text::parse_double(w[first + 1]);
    const auto z = text::parse_double(w[first + 2]);
    if (!x || !y || !z) {
        return std::nullopt;
    }
    return Vec3{*x, *y, *z};
}

TriangleMesh parse_stl_ascii(std::string_view bytes)
{
    TriangleMesh mesh;
    const auto lines = text::split_lines(bytes);
    bool in_facet = false;
    bool ended = false;
    std::size_t facet_line = 0;
    std::vector<Vec3> verts;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const auto w = words(lines[i]);
        if (w.empty()) {
            continue;
        }
        const auto key = w[0];
        if (ended) {
            // Some exporters concatenate several solids.
            if (key == "solid") {
                ended = false;
                continue;
            }
            throw Error(Errc::parse, "unexpected '" + std::string(key) + "' after endsolid", line_no);
        }
        if (key == "solid") {
            if (i != 0 && in_facet) {
                throw Error(Errc::parse, "'solid' inside a facet", line_no);
            }
        } else if (key == "facet") {
            if (in_facet) {
                throw Error(Errc::parse, "nested facet", line_no);
            }
            const auto n = w.size() >= 2 && w[1] == "normal" ? parse_xyz(w, 2) : std::nullopt;
            if (!n) {
                throw Error(Errc::parse, "expected 'facet normal nx ny nz'", line_no);
            }
            mesh.source_normals.push_back(*n);
            in_facet = true;
            facet_line = line_no;
            verts.clear();
        } else if (key == "outer" || key == "endloop") {
            if (!in_facet) {
                throw Error(Errc::parse, "'" + std::string(key) + "' outside a facet", line_no);
            }
        } else if (key == "vertex") {
            const auto v = parse_xyz(w, 1);
            if (!in_facet || !v) {
                throw Error(Errc::parse, "malformed vertex record", line_no);
            }
            verts.push_back(*v);
        } else if (key == "endfacet") {
            if (!in_facet || verts.size() != 3) {
                throw Error(Errc::parse,
                            "facet starting at line " + std::to_string(facet_line) + " needs exactly 3 vertices",
                            line_no);
            }
            const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
            mesh.vertices.insert(mesh.vertices.end(), verts.begin(), verts.end());
            mesh.triangles.push_back({base, base + 1, base + 2});
            in_facet = false;
        } else if (key == "endsolid") {
            if (in_facet) {
                throw Error(Errc::parse, "endsolid inside a facet", line_no);
            }
            ended = true;
        } else {
            throw Error(Errc::parse, "unknown ASCII STL keyword '" + std::string(key) + "'", line_no);
        }
    }
    if (in_facet) {
        throw Error(Errc::parse, "unterminated facet", facet_line);
    }
    return mesh;
}

std::uint32_t obj_index(std::string_view token, std::size_t vertex_count, std::size_t line_no)
{
    const auto slash = token.find('/');
    const auto head = token.substr(0, slash);
    long long idx = 0;
    std::size_t used = 0;
    try {
        idx = std::stoll(std::string(head), &used);
    } catch (const std::exception&) {
        throw Error(Errc::parse, "bad face index '" + std::string(token) + "'", line_no);
    }
    if (used != head.size() || idx == 0) {
        throw Error(Errc::parse, "bad face index '" + std::string(token) + "'", line_no);
    }
    const long long n = static_cast<long long>(vertex_count);
    const long long resolved = idx > 0 ? idx - 1 : n + idx;
    if (resolved < 0 || resolved >= n) {
        throw Error(Errc::parse,
                    "face index " + std::to_string(idx) + " out of range (" + std::to_string(n) + " vertices)",
                    line_no);
    }
    return static_cast<std::uint32_t>(resolved);
}

TriangleMesh parse_obj(std::string_view bytes)
{
    TriangleMesh mesh;
    const auto lines = text::split_lines(bytes);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        std::string_view line = lines[i];
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto w = words(line);
        if (w.empty()) {
            continue;
        }
        if (w[0] == "v") {
            const auto v = parse_xyz(w, 1);
            if (!v) {
                throw Error(Errc::parse, "malformed vertex record", line_no);
            }
            mesh.vertices.push_back(*v);
        } else if (w[0] == "f") {
            if (w.size() < 4) {
                throw Error(Errc::parse, "face needs at least 3 vertices", line_no);
            }
            std::vector<std::uint32_t> idx;
            for (std::size_t k = 1; k < w.size(); ++k) {
                idx.push_back(obj_index(w[k], mesh.vertices.size(), line_no));
            }
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
                mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
        // vn, vt, vp, l, o, g, s, usemtl, mtllib and anything else are ignored.
    }
    return mesh;
}

bool has_obj_extension(std::string_view name)
{
    if (name.size() < 4) {
        return false;
    }
    std::string ext(name.substr(name.size() - 4));
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".obj";
}

TriangleMesh parse_stl_any(std::string_view bytes)
{
    if (binary_size_consistent(bytes)) {
        return parse_stl_binary(bytes);
    }
    if (looks_like_text(bytes) && starts_with_solid(bytes)) {
        return parse_stl_ascii(bytes);
    }
    return parse_stl_binary(bytes);
}

} // namespace

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 cross(Vec3 a, Vec3 b) { return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x}; }
double norm(Vec3 v) { return std::hypot(v.x, v.y, v.z); }

void TriangleMesh::validate() const
{
    if (triangles.empty()) {
        fail(Errc::validation, "mesh has no triangles");
    }
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& v = vertices[i];
        if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
            fail(Errc::validation, "vertex " + std::to_string(i) + " is not finite");
        }
    }
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (auto idx : triangles[t]) {
            if (idx >= vertices.size()) {
                fail(Errc::validation, "triangle " + std::to_string(t) + " references vertex " +
                                           std::to_string(idx) + " of " + std::to_string(vertices.size()));
            }
        }
    }
    if (!source_normals.empty() && source_normals.size() != triangles.size()) {
        fail(Errc::validation, "source normal count does not match triangle count");
    }
}

std::array<Vec3, 2> TriangleMesh::bounding_box() const
{
    if (vertices.empty()) {
        return {};
    }
    Vec3 lo = vertices.front();
    Vec3 hi = vertices.front();
    for (const auto& v : vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return {lo, hi};
}

MeshFormat parse_mesh_format(std::string_view name)
{
    std::string s(text::trim(name));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s.empty() || s == "auto") return MeshFormat::auto_detect;
    if (s == "stl") return MeshFormat::stl;
    if (s == "stl-binary") return MeshFormat::stl_binary;
    if (s == "stl-ascii") return MeshFormat::stl_ascii;
    if (s == "obj") return MeshFormat::obj;
    fail(Errc::config, "unknown mesh format '" + std::string(name) + "' (stl, stl-binary, stl-ascii, obj, auto)");
}

std::string_view to_string(MeshFormat format)
{
    switch (format) {
    case MeshFormat::auto_detect: return "auto";
    case MeshFormat::stl: return "stl";
    case MeshFormat::stl_binary: return "stl-binary";
    case MeshFormat::stl_ascii: return "stl-ascii";
    case MeshFormat::obj: return "obj";
    }
    return "auto";
}

TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format, std::string_view name_hint)
{
    TriangleMesh mesh;
    switch (format) {
    case MeshFormat::stl_binary: mesh = parse_stl_binary(bytes); break;
    case MeshFormat::stl_ascii: mesh = parse_stl_ascii(bytes); break;
    case MeshFormat::obj: mesh = parse_obj(bytes); break;
    case MeshFormat::stl: mesh = parse_stl_any(bytes); break;
    case MeshFormat::auto_detect:
        if (binary_size_consistent(bytes)) {
            mesh = parse_stl_binary(bytes);
        } else if (!looks_like_text(bytes)) {
            mesh = parse_stl_binary(bytes); // reports the size mismatch
        } else if (starts_with_solid(bytes) && !has_obj_extension(name_hint)) {
            mesh = parse_stl_ascii(bytes);
        } else {
            mesh = parse_obj(bytes);
        }
        break;
    }
    if (mesh.triangles.empty()) {
        fail(Errc::parse, "mesh contains no triangles");
    }
    mesh.validate();
    return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format)
{
    const auto bytes = text::read_file(path);
    return parse_mesh(bytes, format, path.filename().string());
}

std::string write_stl_binary(const TriangleMesh& mesh)
{
    mesh.validate();
    std::string out(kStlHeader, '\0');
    const std::string_view tag = "binary STL written by roughcast";
    std::copy(tag.begin(), tag.end(), out.begin());
    put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
    out.reserve(kStlHeader + 4 + mesh.triangles.size() * kStlRecord);
    for (const auto& tri : mesh.triangles) {
        const Vec3 a = mesh.vertices[tri[0]];
        const Vec3 b = mesh.vertices[tri[1]];
        const Vec3 c = mesh.vertices[tri[2]];
        Vec3 n = cross(b - a, c - a);
        const double len = norm(n);
        n = len > 0.0 ? (1.0 / len) * n : Vec3{};
        for (const Vec3& v : {n, a, b, c}) {
            put_f32(out, static_cast<float>(v.x));
            put_f32(out, static_cast<float>(v.y));
            put_f32(out, static_cast<float>(v.z));
        }
        out.append(2, '\0');
    }
    return out;
}

std::string write_stl_ascii(const TriangleMesh& mesh, std::string_view name)
{
    mesh.validate();
    std::string out = "solid " + std::string(name) + "\n";
    auto xyz = [](Vec3 v) {
        return text::format_double(v.x) + " " + text::format_double(v.y) + " " + text::format_double(v.z);
    };
    for (const auto& tri : mesh.triangles) {
        const Vec3 a = mesh.vertices[tri[0]];
        const Vec3 b = mesh.vertices[tri[1]];
        const Vec3 c = mesh.vertices[tri[2]];
        Vec3 n = cross(b - a, c - a);
        const double len = norm(n);
        n = len > 0.0 ? (1.0 / len) * n : Vec3{};
        out += "  facet normal " + xyz(n) + "\n    outer loop\n";
        for (const Vec3& v : {a, b, c}) {
            out += "      vertex " + xyz(v) + "\n";
        }
        out += "    endloop\n  endfacet\n";
    }
    out += "endsolid " + std::string(name) + "\n";
    return out;
}

} // namespace roughcast::mesh
