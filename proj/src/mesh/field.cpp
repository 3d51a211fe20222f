#include "roughcast/error.hpp"
#include "roughcast/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roughcast::mesh {

using nlohmann::json;

namespace {

constexpr std::array<Rgb, 5> kRamp = {{
    {0, 0, 255},
    {0, 255, 255},
    {0, 255, 0},
    {255, 255, 0},
    {255, 0, 0},
}};

// Rows per inference batch; bounds hidden-activation memory on large meshes.
constexpr std::size_t kPredictChunk = 16384;

double number_field(const json& j, std::string_view key)
{
    const auto& v = j.at(std::string(key));
    if (!v.is_number()) {
        throw Error(Errc::validation, std::string(key) + " must be a number");
    }
    return v.get<double>();
}

} // namespace

Rgb ramp_color(double value, double lo, double hi)
{
    double t = 0.0;
    if (hi > lo) {
        t = std::clamp((value - lo) / (hi - lo), 0.0, 1.0);
    }
    const double pos = t * 4.0;
    const auto seg = std::min<std::size_t>(static_cast<std::size_t>(pos), 3);
    const double f = pos - static_cast<double>(seg);
    Rgb out{};
    for (std::size_t c = 0; c < 3; ++c) {
        const double a = kRamp[seg][c];
        const double b = kRamp[seg + 1][c];
        out[c] = static_cast<std::uint8_t>(std::lround(a + (b - a) * f));
    }
    return out;
}

RoughnessField predict_field(const nn::MlpModel& model, const TriangleMesh& mesh, const Orientation& orientation,
                             const data::ProcessParameters& params, const ColorRange& range)
{
    if (const auto bad = params.invalid_fields(); !bad.empty()) {
        std::string names;
        for (const auto& b : bad) {
            names += (names.empty() ? "" : ", ") + b;
        }
        fail(Errc::validation, "invalid process parameters: " + names);
    }
    if (model.feature_order != data::feature_order() || model.input_dim() != data::kFeatureCount ||
        model.scaler.width() != data::kFeatureCount) {
        fail(Errc::contract, "model feature order does not match the canonical 8-feature order");
    }
    if (!range.automatic && !(std::isfinite(range.lo) && std::isfinite(range.hi) && range.lo < range.hi)) {
        fail(Errc::validation, "fixed color range needs finite lo < hi");
    }
    mesh.validate();

    const TriangleMesh oriented = apply_orientation(mesh, orientation);
    const auto desc = facet_descriptors(oriented);

    RoughnessField field;
    field.params = params;
    field.orientation = orientation;
    field.facets.resize(desc.size());

    std::vector<std::size_t> live;
    for (const auto& d : desc) {
        auto& f = field.facets[d.id];
        f.id = d.id;
        f.angle_deg = d.inclination;
        f.clamped = d.clamped;
        f.degenerate = d.degenerate;
        f.area = d.area;
        if (!d.degenerate) {
            live.push_back(d.id);
        }
    }

    const auto p = params.as_array();
    for (std::size_t first = 0; first < live.size(); first += kPredictChunk) {
        const std::size_t last = std::min(live.size(), first + kPredictChunk);
        Matrix rows(last - first, data::kFeatureCount);
        for (std::size_t i = first; i < last; ++i) {
            auto r = rows.row(i - first);
            std::copy(p.begin(), p.end(), r.begin());
            r[data::kFeatureCount - 1] = desc[live[i]].model_angle;
        }
        const auto ra = model.predict(rows);
        for (std::size_t i = first; i < last; ++i) {
            field.facets[live[i]].ra = ra[i - first];
        }
    }

    auto& s = field.summary;
    s.facet_count = desc.size();
    s.predicted_count = live.size();
    s.degenerate_count = desc.size() - live.size();
    for (const auto& f : field.facets) {
        s.clamped_count += f.clamped ? 1 : 0;
    }
    if (!live.empty()) {
        s.min = std::numeric_limits<double>::infinity();
        s.max = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        double area_sum = 0.0;
        double weighted = 0.0;
        for (auto id : live) {
            const auto& f = field.facets[id];
            s.min = std::min(s.min, *f.ra);
            s.max = std::max(s.max, *f.ra);
            sum += *f.ra;
            area_sum += f.area;
            weighted += f.area * *f.ra;
        }
        s.mean = sum / static_cast<double>(live.size());
        s.area_weighted_mean = area_sum > 0.0 ? weighted / area_sum : s.mean;

        s.histogram_edges.resize(kHistogramBins + 1);
        for (std::size_t b = 0; b <= kHistogramBins; ++b) {
            s.histogram_edges[b] = s.min + (s.max - s.min) * static_cast<double>(b) / kHistogramBins;
        }
        s.histogram_edges.back() = s.max;
        s.histogram_counts.assign(kHistogramBins, 0);
        for (auto id : live) {
            std::size_t b = 0;
            if (s.max > s.min) {
                const double t = (*field.facets[id].ra - s.min) / (s.max - s.min);
                b = std::min(kHistogramBins - 1, static_cast<std::size_t>(t * kHistogramBins));
            }
            ++s.histogram_counts[b];
        }
    }

    field.color_lo = range.automatic ? s.min : range.lo;
    field.color_hi = range.automatic ? s.max : range.hi;
    for (auto& f : field.facets) {
        f.rgb = f.ra ? ramp_color(*f.ra, field.color_lo, field.color_hi) : Rgb{128, 128, 128};
    }
    return field;
}

json to_json(const RoughnessField& field)
{
    json facets = json::array();
    for (const auto& f : field.facets) {
        facets.push_back({
            {"id", f.id},
            {"angle_deg", f.angle_deg},
            {"ra_um", f.ra ? json(*f.ra) : json(nullptr)},
            {"rgb", {f.rgb[0], f.rgb[1], f.rgb[2]}},
            {"clamped", f.clamped},
            {"degenerate", f.degenerate},
        });
    }
    const auto& s = field.summary;
    json summary = {
        {"min", s.min},
        {"max", s.max},
        {"mean", s.mean},
        {"area_weighted_mean", s.area_weighted_mean},
        {"histogram", {{"edges", s.histogram_edges}, {"counts", s.histogram_counts}}},
        {"facet_count", s.facet_count},
        {"predicted_count", s.predicted_count},
        {"clamped_count", s.clamped_count},
        {"degenerate_count", s.degenerate_count},
        {"color_range", {{"lo", field.color_lo}, {"hi", field.color_hi}}},
    };
    return {
        {"facets", std::move(facets)},
        {"summary", std::move(summary)},
        {"params", to_json(field.params)},
        {"orientation", to_json(field.orientation)},
    };
}

std::string field_sidecar(const RoughnessField& field)
{
    std::string out;
    out.reserve(4 + 4 * field.facets.size());
    auto put = [&out](const void* p) { out.append(static_cast<const char*>(p), 4); };
    const auto count = static_cast<std::uint32_t>(field.facets.size());
    put(&count);
    for (const auto& f : field.facets) {
        const float v = f.ra ? static_cast<float>(*f.ra) : std::numeric_limits<float>::quiet_NaN();
        put(&v);
    }
    return out;
}

json to_json(const data::ProcessParameters& p)
{
    json j = json::object();
    const auto v = p.as_array();
    for (std::size_t i = 0; i < v.size(); ++i) {
        j[std::string(data::kFeatureNames[i])] = v[i];
    }
    return j;
}

data::ProcessParameters params_from_json(const json& j, data::ProcessParameters base)
{
    if (!j.is_object()) {
        fail(Errc::validation, "process parameters must be a JSON object");
    }
    auto values = base.as_array();
    std::vector<std::string> bad;
    for (const auto& [key, value] : j.items()) {
        const auto it = std::find(data::kFeatureNames.begin(), data::kFeatureNames.begin() + values.size(), key);
        if (it == data::kFeatureNames.begin() + values.size()) {
            bad.push_back(key + " (unknown)");
            continue;
        }
        if (!value.is_number()) {
            bad.push_back(key);
            continue;
        }
        values[static_cast<std::size_t>(it - data::kFeatureNames.begin())] = value.get<double>();
    }
    auto params = data::ProcessParameters::from_array(values);
    for (const auto& f : params.invalid_fields()) {
        if (std::find(bad.begin(), bad.end(), f) == bad.end()) {
            bad.push_back(f);
        }
    }
    if (!bad.empty()) {
        std::string names;
        for (const auto& b : bad) {
            names += (names.empty() ? "" : ", ") + b;
        }
        fail(Errc::validation, "invalid process parameters: " + names);
    }
    return params;
}

json to_json(const Orientation& o)
{
    return {{"rx", o.rx}, {"ry", o.ry}, {"rz", o.rz}};
}

Orientation orientation_from_json(const json& j)
{
    if (!j.is_object()) {
        fail(Errc::validation, "orientation must be a JSON object");
    }
    Orientation o;
    for (const auto& [key, value] : j.items()) {
        if (key != "rx" && key != "ry" && key != "rz") {
            fail(Errc::validation, "unknown orientation field " + key);
        }
    }
    if (j.contains("rx")) o.rx = number_field(j, "rx");
    if (j.contains("ry")) o.ry = number_field(j, "ry");
    if (j.contains("rz")) o.rz = number_field(j, "rz");
    if (!std::isfinite(o.rx) || !std::isfinite(o.ry) || !std::isfinite(o.rz)) {
        fail(Errc::validation, "orientation angles must be finite");
    }
    return o;
}

} // namespace roughcast::mesh
