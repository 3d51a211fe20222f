#include "roughcast/error.hpp"
#include "roughcast/server.hpp"
#include "roughcast/text.hpp"

#include <httplib.h>

#include <cmath>

namespace roughcast::srv {

namespace {

void send(httplib::Response& res, const Response& r)
{
    res.status = r.status;
    res.set_content(r.body, r.content_type);
}

} // namespace

HttpServer::HttpServer(Service& service, std::string static_dir) : server_(std::make_unique<httplib::Server>())
{
    auto& s = *server_;
    Service* svc = &service;
    // One byte over the limit so the service reports 413 with a JSON body.
    s.set_payload_max_length(service.options().max_upload_bytes + 1);

    s.Get("/api/health", [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->health()); });
    s.Get("/api/model/info",
          [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->model_info()); });
    s.Post("/api/mesh", [svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->upload_mesh(req.body, req.get_header_value("X-Mesh-Format")));
    });
    s.Post("/api/predict",
           [svc](const httplib::Request& req, httplib::Response& res) { send(res, svc->predict(req.body)); });
    s.Delete(R"(/api/mesh/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
        send(res, svc->delete_mesh(req.matches[1]));
    });

    if (!static_dir.empty() && !s.set_mount_point("/", static_dir)) {
        fail(Errc::io, "static directory not found: " + static_dir);
    }
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) {
            fail(Errc::io, "cannot bind " + host);
        }
        return bound;
    }
    if (!server_->bind_to_port(host, port)) {
        fail(Errc::io, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

bool HttpServer::run()
{
    return server_->listen_after_bind();
}

void HttpServer::stop()
{
    if (server_ && server_->is_running()) {
        server_->stop();
    }
}

void HttpServer::wait_until_ready() const
{
    server_->wait_until_ready();
}

std::pair<std::string, int> parse_address(std::string_view addr)
{
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
        fail(Errc::config, "address must be host:port (got '" + std::string(addr) + "')");
    }
    const auto port = text::parse_double(addr.substr(colon + 1));
    if (!port || *port < 0 || *port > 65535 || *port != std::floor(*port)) {
        fail(Errc::config, "invalid port in '" + std::string(addr) + "'");
    }
    return {std::string(addr.substr(0, colon)), static_cast<int>(*port)};
}

} // namespace roughcast::srv
