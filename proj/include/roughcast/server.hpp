#pragma once

#include "roughcast/mesh.hpp"
#include "roughcast/nn/mlp.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace httplib {
class Server;
}

namespace roughcast::srv {

inline constexpr std::size_t kDefaultCacheCapacity = 32;
inline constexpr std::size_t kDefaultUploadLimit = std::size_t{64} << 20;

struct ServiceOptions {
    std::size_t cache_capacity = kDefaultCacheCapacity;
    std::size_t max_upload_bytes = kDefaultUploadLimit;
};

struct MeshHandle {
    std::string id;
    std::size_t triangle_count = 0;
    std::array<mesh::Vec3, 2> bounding_box{};
    std::int64_t uploaded_at_ms = 0; // unix epoch
};

nlohmann::json to_json(const MeshHandle& h);

struct PredictRequest {
    std::string mesh_id;
    data::ProcessParameters params;
    mesh::Orientation orientation;
    mesh::ColorRange color_range;
};

// A rejected predict body; `fields` names the offending request fields.
struct RequestError {
    std::string message;
    std::vector<std::string> fields;
};
std::variant<PredictRequest, RequestError> parse_predict_request(const nlohmann::json& body);

struct Response {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

// Transport-independent core of the HTTP API. The model is fixed at
// construction; the mesh cache is the only mutable state.
class Service {
public:
    explicit Service(std::optional<nn::MlpModel> model, ServiceOptions options = {});

    bool ready() const { return model_.has_value(); }
    const ServiceOptions& options() const { return options_; }

    Response health() const;
    Response model_info() const;
    Response upload_mesh(std::string_view body, std::string_view declared_format);
    Response predict(std::string_view body);
    Response delete_mesh(const std::string& id);

    // Typed entry points used by the handlers above (and by tests).
    MeshHandle add_mesh(mesh::TriangleMesh mesh);
    std::shared_ptr<const mesh::TriangleMesh> find_mesh(const std::string& id);
    bool remove_mesh(const std::string& id);
    std::size_t cache_size() const;

private:
    struct Entry {
        MeshHandle handle;
        std::shared_ptr<const mesh::TriangleMesh> mesh;
        std::list<std::string>::iterator lru;
    };

    std::optional<nn::MlpModel> model_;
    ServiceOptions options_;
    std::string info_body_;
    std::uint64_t id_salt_;

    mutable std::mutex mutex_;
    std::unordered_map<std::string, Entry> cache_;
    std::list<std::string> lru_; // most recently used first
    std::uint64_t next_id_ = 1;
};

nlohmann::json model_info_json(const nn::MlpModel& model);

// Binds the service to HTTP routes under /api; optional static UI directory
// served at /.
class HttpServer {
public:
    HttpServer(Service& service, std::string static_dir = {});
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Returns the bound port (an ephemeral one when port is 0).
    int bind(const std::string& host, int port);
    // Blocks until stop().
    bool run();
    void stop();
    void wait_until_ready() const;

private:
    std::unique_ptr<httplib::Server> server_;
};

// "host:port" -> pair; throws Errc::config.
std::pair<std::string, int> parse_address(std::string_view addr);

} // namespace roughcast::srv
