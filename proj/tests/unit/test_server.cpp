#include "live_server.hpp"
#include "mesh_fixtures.hpp"
#include "support.hpp"

#include "roughcast/error.hpp"
#include "roughcast/server.hpp"

#include <doctest.h>

#include <set>
#include <thread>

using namespace roughcast;
using nlohmann::json;
using roughcast::testing::LiveServer;
using roughcast::testing::unit_cube;

namespace {

nn::MlpModel served_model()
{
    auto model = nn::init_mlp(nn::MlpConfig{}, data::kFeatureCount);
    model.scaler = data::fit_scaler(roughcast::testing::random_feature_rows(200, 8));
    model.metadata.test_metrics = nn::MetricsReport{1.752, 6.900, 0.900, 10.89};
    return model;
}

json predict_body(const std::string& id, const data::ProcessParameters& p, const mesh::Orientation& o)
{
    return {{"mesh_id", id}, {"params", mesh::to_json(p)}, {"orientation", mesh::to_json(o)}};
}

const data::ProcessParameters kParams{0.2, 200, 200, 15, 0.42, 60, 80};

std::string upload(srv::Service& s, const mesh::TriangleMesh& m)
{
    const auto r = s.upload_mesh(mesh::write_stl_binary(m), "stl");
    REQUIRE(r.status == 200);
    return json::parse(r.body)["id"].get<std::string>();
}

} // namespace

TEST_CASE("health and model info")
{
    srv::Service empty(std::nullopt);
    CHECK(empty.health().status == 200);
    CHECK(json::parse(empty.health().body)["status"] == "ok");
    CHECK(empty.model_info().status == 503);

    srv::Service s(served_model());
    const auto info = s.model_info();
    REQUIRE(info.status == 200);
    const auto j = json::parse(info.body);
    CHECK(j["feature_order"].get<std::vector<std::string>>() == data::feature_order());
    CHECK(j["metrics"]["mae"].get<double>() == 1.752);
    CHECK(j["metrics"]["mse"].get<double>() == 6.900);
    CHECK(j["metrics"]["r2"].get<double>() == 0.900);
    CHECK(j["metrics"]["mape"].get<double>() == 10.89);
    CHECK(j["parameter_ranges"].size() == 8);
    CHECK(j["parameter_ranges"][0]["min"].get<double>() == 0.12);
    CHECK(j["parameter_ranges"][7]["max"].get<double>() == 170.0);

    const auto id = upload(s, unit_cube());
    for (int i = 0; i < 5; ++i) {
        s.predict(predict_body(id, kParams, {}).dump());
    }
    CHECK(s.model_info().body == info.body);
}

TEST_CASE("mesh upload")
{
    srv::Service s(served_model(), {.cache_capacity = 32, .max_upload_bytes = 4096});
    const auto ok = s.upload_mesh(mesh::write_stl_binary(unit_cube()), "stl");
    REQUIRE(ok.status == 200);
    CHECK(json::parse(ok.body)["triangle_count"] == 12);

    auto bytes = mesh::write_stl_binary(unit_cube());
    const auto bad = s.upload_mesh(bytes.substr(0, bytes.size() - 10), "stl");
    CHECK(bad.status == 422);
    CHECK(json::parse(bad.body)["error"] == "corrupt-file");

    const auto obj = s.upload_mesh("v 0 0 0\nv 1 0 0\nf 1 2 3\n", "obj");
    CHECK(obj.status == 422);
    CHECK(json::parse(obj.body)["line"] == 3);

    CHECK(s.upload_mesh(std::string(5000, 'x'), "auto").status == 413);
    CHECK(s.upload_mesh(bytes, "ply").status == 400);
}

TEST_CASE("LRU eviction and id uniqueness")
{
    srv::Service s(served_model());
    std::vector<std::string> ids;
    for (int i = 0; i < 32; ++i) {
        ids.push_back(upload(s, unit_cube()));
    }
    // Touch the oldest so the second-oldest becomes least recently used.
    CHECK(s.predict(predict_body(ids[0], kParams, {}).dump()).status == 200);
    ids.push_back(upload(s, unit_cube()));
    CHECK(s.cache_size() == 32);
    CHECK(s.predict(predict_body(ids[1], kParams, {}).dump()).status == 404);
    CHECK(s.predict(predict_body(ids[0], kParams, {}).dump()).status == 200);

    CHECK(s.delete_mesh(ids[5]).status == 200);
    CHECK(s.delete_mesh(ids[5]).status == 404);
    for (int i = 0; i < 40; ++i) {
        ids.push_back(upload(s, unit_cube()));
    }
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == ids.size());
}

TEST_CASE("predict errors and echo")
{
    srv::Service s(served_model());
    const auto id = upload(s, unit_cube());

    json body = predict_body(id, kParams, {90, 0, 0});
    body["params"].erase("fan_speed");
    body["params"]["bed_temp"] = -1;
    const auto r = s.predict(body.dump());
    CHECK(r.status == 400);
    const auto fields = json::parse(r.body)["fields"].get<std::vector<std::string>>();
    CHECK(fields == std::vector<std::string>{"params.bed_temp", "params.fan_speed"});

    CHECK(s.predict("not json").status == 400);
    CHECK(s.predict(predict_body("m999-0", kParams, {}).dump()).status == 404);
    CHECK(srv::Service(std::nullopt).predict(predict_body(id, kParams, {}).dump()).status == 503);

    const auto a = s.predict(predict_body(id, kParams, {90, 0, 0}).dump());
    const auto b = s.predict(predict_body(id, kParams, {90, 0, 0}).dump());
    REQUIRE(a.status == 200);
    CHECK(a.body == b.body);
    const auto j = json::parse(a.body);
    CHECK(mesh::params_from_json(j["params"]) == kParams);
    CHECK(mesh::orientation_from_json(j["orientation"]) == mesh::Orientation{90, 0, 0});
    CHECK(j["mesh_id"] == id);

    auto fixed = predict_body(id, kParams, {});
    fixed["color_range"] = {{"lo", 0}, {"hi", 1}};
    CHECK(s.predict(fixed.dump()).status == 200);
    fixed["color_range"] = {{"lo", 2}, {"hi", 1}};
    CHECK(s.predict(fixed.dump()).status == 400);
}

TEST_CASE("HTTP routes match the library")
{
    const auto model = served_model();
    LiveServer live(model);
    auto cli = live.client();

    auto health = cli.Get("/api/health");
    REQUIRE(health);
    CHECK(health->status == 200);

    const auto sphere = roughcast::testing::jittered_sphere(10, 16, 6);
    const auto stl = mesh::write_stl_binary(sphere);
    auto up = cli.Post("/api/mesh", {{"X-Mesh-Format", "auto"}}, stl, "application/octet-stream");
    REQUIRE(up);
    REQUIRE(up->status == 200);
    const auto id = json::parse(up->body)["id"].get<std::string>();

    const auto local = mesh::parse_mesh(stl);
    Rng rng(3);
    for (int i = 0; i < 5; ++i) {
        const auto p = roughcast::testing::random_params(rng);
        const auto o = roughcast::testing::random_orientation(rng);
        auto res = cli.Post("/api/predict", predict_body(id, p, o).dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        const auto facets = json::parse(res->body)["facets"];
        const auto ref = mesh::predict_field(model, local, o, p);
        REQUIRE(facets.size() == ref.facets.size());
        for (std::size_t f = 0; f < ref.facets.size(); ++f) {
            CHECK(facets[f]["ra_um"].get<double>() == *ref.facets[f].ra);
        }
    }

    auto del = cli.Delete("/api/mesh/" + id);
    REQUIRE(del);
    CHECK(del->status == 200);
    auto gone = cli.Post("/api/predict", predict_body(id, kParams, {}).dump(), "application/json");
    REQUIRE(gone);
    CHECK(gone->status == 404);
}

TEST_CASE("HTTP upload limit")
{
    LiveServer live(served_model(), {.cache_capacity = 4, .max_upload_bytes = 1024});
    auto cli = live.client();
    auto res = cli.Post("/api/mesh", std::string(4096, 'v'), "application/octet-stream");
    REQUIRE(res);
    CHECK(res->status == 413);
}

TEST_CASE("concurrent predicts equal serial results")
{
    LiveServer live(served_model());
    auto cli = live.client();
    const auto stl = mesh::write_stl_binary(roughcast::testing::jittered_sphere(12, 20, 9));
    auto up = cli.Post("/api/mesh", stl, "application/octet-stream");
    REQUIRE(up);
    const auto id = json::parse(up->body)["id"].get<std::string>();

    Rng rng(12);
    std::vector<std::string> bodies;
    std::vector<std::string> serial;
    for (int i = 0; i < 64; ++i) {
        bodies.push_back(
            predict_body(id, roughcast::testing::random_params(rng), roughcast::testing::random_orientation(rng))
                .dump());
        serial.push_back(cli.Post("/api/predict", bodies.back(), "application/json")->body);
    }
    std::vector<std::string> parallel(64);
    std::vector<std::thread> threads;
    for (int i = 0; i < 64; ++i) {
        threads.emplace_back([&, i] {
            auto c = live.client();
            if (auto r = c.Post("/api/predict", bodies[i], "application/json")) {
                parallel[i] = r->body;
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (int i = 0; i < 64; ++i) {
        CHECK(parallel[i] == serial[i]);
    }
}

TEST_CASE("address parsing")
{
    CHECK(srv::parse_address("127.0.0.1:8080") == std::pair<std::string, int>{"127.0.0.1", 8080});
    CHECK_THROWS_AS(srv::parse_address("localhost"), Error);
    CHECK_THROWS_AS(srv::parse_address("host:99999"), Error);
}
