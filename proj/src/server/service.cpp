#include "roughcast/doe.hpp"
#include "roughcast/error.hpp"
#include "roughcast/nn/serialize.hpp"
#include "roughcast/rng.hpp"
#include "roughcast/server.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace roughcast::srv {

using nlohmann::json;

namespace {

Response json_response(int status, const json& body)
{
    return {status, body.dump(), "application/json"};
}

Response error_response(int status, std::string_view code, const std::string& message,
                        const std::vector<std::string>& fields = {}, std::optional<std::size_t> line = {})
{
    json body = {{"error", code}, {"message", message}};
    if (!fields.empty()) {
        body["fields"] = fields;
    }
    if (line) {
        body["line"] = *line;
    }
    return json_response(status, body);
}

json vec_json(mesh::Vec3 v)
{
    return json::array({v.x, v.y, v.z});
}

} // namespace

json to_json(const MeshHandle& h)
{
    return {
        {"id", h.id},
        {"triangle_count", h.triangle_count},
        {"bounding_box", {{"min", vec_json(h.bounding_box[0])}, {"max", vec_json(h.bounding_box[1])}}},
        {"uploaded_at_ms", h.uploaded_at_ms},
    };
}

std::variant<PredictRequest, RequestError> parse_predict_request(const json& body)
{
    if (!body.is_object()) {
        return RequestError{"request body must be a JSON object", {}};
    }
    RequestError err;
    PredictRequest req;

    if (!body.contains("mesh_id") || !body["mesh_id"].is_string()) {
        err.fields.push_back("mesh_id");
    } else {
        req.mesh_id = body["mesh_id"].get<std::string>();
    }

    const auto params = body.contains("params") ? body["params"] : json();
    if (!params.is_object()) {
        err.fields.push_back("params");
    } else {
        std::array<double, data::kProcessParameterCount> values{};
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::string key(data::kFeatureNames[i]);
            const auto it = params.find(key);
            if (it == params.end() || !it->is_number() || !std::isfinite(it->get<double>()) ||
                it->get<double>() <= 0.0) {
                err.fields.push_back("params." + key);
            } else {
                values[i] = it->get<double>();
            }
        }
        for (const auto& [key, value] : params.items()) {
            const auto end = data::kFeatureNames.begin() + data::kProcessParameterCount;
            if (std::find(data::kFeatureNames.begin(), end, key) == end) {
                err.fields.push_back("params." + key);
            }
        }
        req.params = data::ProcessParameters::from_array(values);
    }

    if (body.contains("orientation")) {
        const auto& o = body["orientation"];
        if (!o.is_object()) {
            err.fields.push_back("orientation");
        } else {
            for (const auto& [key, value] : o.items()) {
                if ((key != "rx" && key != "ry" && key != "rz") || !value.is_number() ||
                    !std::isfinite(value.get<double>())) {
                    err.fields.push_back("orientation." + key);
                }
            }
            if (err.fields.empty()) {
                req.orientation = mesh::orientation_from_json(o);
            }
        }
    }

    if (body.contains("color_range")) {
        const auto& c = body["color_range"];
        if (c.is_string() && c.get<std::string>() == "auto") {
            req.color_range = {};
        } else if (c.is_object() && c.contains("lo") && c.contains("hi") && c["lo"].is_number() &&
                   c["hi"].is_number() && c["lo"].get<double>() < c["hi"].get<double>()) {
            req.color_range = mesh::ColorRange::fixed(c["lo"].get<double>(), c["hi"].get<double>());
        } else {
            err.fields.push_back("color_range");
        }
    }

    if (!err.fields.empty()) {
        err.message = "invalid request fields";
        for (std::size_t i = 0; i < err.fields.size(); ++i) {
            err.message += (i == 0 ? ": " : ", ") + err.fields[i];
        }
        return err;
    }
    return req;
}

json model_info_json(const nn::MlpModel& model)
{
    json scaler_features = json::array();
    for (std::size_t i = 0; i < model.scaler.width(); ++i) {
        scaler_features.push_back(
            {{"name", model.feature_order[i]}, {"min", model.scaler.min[i]}, {"max", model.scaler.max[i]}});
    }
    json scaler = {{"features", std::move(scaler_features)}};
    if (model.scaler.has_target()) {
        scaler["target"] = {{"min", *model.scaler.target_min}, {"max", *model.scaler.target_max}};
    }

    json ranges = json::array();
    for (const auto& f : doe::study_factors()) {
        ranges.push_back({{"name", f.name}, {"unit", f.unit}, {"min", f.levels[0]}, {"max", f.levels[2]},
                          {"levels", f.levels}});
    }
    ranges.push_back({{"name", "surface_angle"},
                      {"unit", "deg"},
                      {"min", data::kMinSurfaceAngle},
                      {"max", data::kMaxSurfaceAngle}});

    const auto& meta = model.metadata;
    return {
        {"model_version", nn::kModelFormatVersion},
        {"feature_order", model.feature_order},
        {"metrics", meta.test_metrics ? nn::to_json(*meta.test_metrics) : json(nullptr)},
        {"best_val_mae", meta.best_val_mae ? json(*meta.best_val_mae) : json(nullptr)},
        {"epochs_run", meta.epochs_run},
        {"train_rows", meta.train_rows},
        {"config", nn::to_json(meta.config)},
        {"scaler", std::move(scaler)},
        {"parameter_ranges", std::move(ranges)},
        {"max_model_angle", mesh::kMaxModelAngle},
    };
}

Service::Service(std::optional<nn::MlpModel> model, ServiceOptions options)
    : model_(std::move(model)), options_(options)
{
    if (options_.cache_capacity == 0) {
        fail(Errc::config, "mesh cache capacity must be >= 1");
    }
    if (model_) {
        if (model_->feature_order != data::feature_order()) {
            fail(Errc::contract, "served model must use the canonical 8-feature order");
        }
        info_body_ = model_info_json(*model_).dump();
    }
    id_salt_ = static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
}

Response Service::health() const
{
    return json_response(200, {{"status", "ok"}, {"model_ready", ready()}});
}

Response Service::model_info() const
{
    if (!model_) {
        return error_response(503, "model-not-ready", "no model loaded");
    }
    return {200, info_body_, "application/json"};
}

MeshHandle Service::add_mesh(mesh::TriangleMesh m)
{
    m.validate();
    MeshHandle h;
    h.triangle_count = m.triangle_count();
    h.bounding_box = m.bounding_box();
    h.uploaded_at_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
    auto shared = std::make_shared<const mesh::TriangleMesh>(std::move(m));

    std::lock_guard lock(mutex_);
    const std::uint64_t n = next_id_++;
    char buf[48];
    std::snprintf(buf, sizeof buf, "m%llu-%08llx", static_cast<unsigned long long>(n),
                  static_cast<unsigned long long>(derive_seed(id_salt_, n) & 0xffffffffULL));
    h.id = buf;
    while (cache_.size() >= options_.cache_capacity) {
        cache_.erase(lru_.back());
        lru_.pop_back();
    }
    lru_.push_front(h.id);
    cache_.emplace(h.id, Entry{h, std::move(shared), lru_.begin()});
    return h;
}

std::shared_ptr<const mesh::TriangleMesh> Service::find_mesh(const std::string& id)
{
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(id);
    if (it == cache_.end()) {
        return nullptr;
    }
    lru_.splice(lru_.begin(), lru_, it->second.lru);
    return it->second.mesh;
}

bool Service::remove_mesh(const std::string& id)
{
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(id);
    if (it == cache_.end()) {
        return false;
    }
    lru_.erase(it->second.lru);
    cache_.erase(it);
    return true;
}

std::size_t Service::cache_size() const
{
    std::lock_guard lock(mutex_);
    return cache_.size();
}

Response Service::upload_mesh(std::string_view body, std::string_view declared_format)
{
    if (body.size() > options_.max_upload_bytes) {
        return error_response(413, "payload-too-large",
                              "mesh upload exceeds " + std::to_string(options_.max_upload_bytes) + " bytes");
    }
    mesh::MeshFormat format;
    try {
        format = mesh::parse_mesh_format(declared_format);
    } catch (const Error& e) {
        return error_response(400, "bad-format", e.what());
    }
    try {
        auto m = mesh::parse_mesh(body, format);
        return json_response(200, to_json(add_mesh(std::move(m))));
    } catch (const Error& e) {
        return error_response(422, to_string(e.code()), e.what(), {}, e.line());
    }
}

Response Service::predict(std::string_view body)
{
    if (!model_) {
        return error_response(503, "model-not-ready", "no model loaded");
    }
    const json parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        return error_response(400, "bad-request", "request body is not valid JSON");
    }
    const auto req = parse_predict_request(parsed);
    if (const auto* err = std::get_if<RequestError>(&req)) {
        return error_response(400, "validation", err->message, err->fields);
    }
    const auto& r = std::get<PredictRequest>(req);
    const auto m = find_mesh(r.mesh_id);
    if (!m) {
        return error_response(404, "not-found", "unknown or evicted mesh id " + r.mesh_id);
    }
    try {
        auto out = mesh::to_json(mesh::predict_field(*model_, *m, r.orientation, r.params, r.color_range));
        out["mesh_id"] = r.mesh_id;
        return json_response(200, out);
    } catch (const Error& e) {
        if (e.code() == Errc::validation) {
            return error_response(400, "validation", e.what());
        }
        return error_response(500, to_string(e.code()), e.what());
    }
}

Response Service::delete_mesh(const std::string& id)
{
    if (!remove_mesh(id)) {
        return error_response(404, "not-found", "unknown or evicted mesh id " + id);
    }
    return json_response(200, {{"deleted", id}});
}

} // namespace roughcast::srv
