#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "longtail/backend.hpp"
#include "longtail/error.hpp"
#include "longtail/retrieval.hpp"
#include "support.hpp"

using namespace longtail;

namespace {

struct FakeEndpoint {
    httplib::Server server;
    int port = 0;
    std::jthread thread;
    std::mutex mu;
    std::vector<Json> bodies;
    std::vector<std::string> auth;
    int fail_first = 0;

    FakeEndpoint() {
        server.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu);
            bodies.push_back(Json::parse(req.body));
            auth.push_back(req.get_header_value("Authorization"));
            if (fail_first-- > 0) {
                res.status = 503;
                return;
            }
            Json out{{"choices", {{{"text", " where was obama born?\nextra"}}}}};
            res.set_content(out.dump(), "application/json");
        });
        server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
            auto texts = Json::parse(req.body).at("texts");
            Json vectors = Json::array();
            for (const auto& t : texts) vectors.push_back({static_cast<double>(t.get<std::string>().size()), 1.0});
            res.set_content(Json{{"vectors", vectors}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::jthread([this] { server.listen_after_bind(); });
    }
    ~FakeEndpoint() { server.stop(); }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_CASE("http completion backend speaks the configured wire format") {
    FakeEndpoint ep;
    testing::TempDir dir;
    testing::write_text(dir / "profile.ini", "[backend]\nname = fake\nbase_url = " + ep.url() +
                                                 "\nmodel = some-model\napi_key_env = LONGTAIL_TEST_KEY\n"
                                                 "max_in_flight = 2\n");
    ::setenv("LONGTAIL_TEST_KEY", "sekrit", 1);
    auto profile = load_http_profile(dir / "profile.ini");
    CHECK(profile.max_in_flight == 2);
    HttpCompletionBackend b(profile);
    auto text = b.complete({"Generate questions:\nobama | born | hawaii =>", "t"});
    CHECK(first_line(text) == "where was obama born?");
    REQUIRE(ep.bodies.size() == 1);
    CHECK(ep.bodies[0]["model"] == "some-model");
    CHECK(ep.bodies[0]["prompt"] == "Generate questions:\nobama | born | hawaii =>");
    CHECK(ep.bodies[0]["temperature"] == 0.0);
    CHECK(ep.bodies[0]["max_tokens"] == 64);
    CHECK(ep.auth[0] == "Bearer sekrit");
    ::unsetenv("LONGTAIL_TEST_KEY");
}

TEST_CASE("retry recovers from transient failures and reports exhaustion") {
    FakeEndpoint ep;
    HttpProfile p;
    p.base_url = ep.url();
    HttpCompletionBackend b(p);
    ep.fail_first = 2;
    auto ok = complete_with_retry(b, {"x =>", "t"}, 3);
    CHECK(ok.text);
    CHECK(ok.attempts == 3);
    ep.fail_first = 5;
    auto bad = complete_with_retry(b, {"x =>", "t"}, 2);
    CHECK_FALSE(bad.text);
    CHECK(bad.error.find("503") != std::string::npos);

    HttpProfile dead;
    dead.base_url = "http://127.0.0.1:1";
    dead.timeout = std::chrono::seconds(1);
    HttpCompletionBackend nowhere(dead);
    CHECK_THROWS_AS(nowhere.complete({"x", "t"}), Error);
}

TEST_CASE("profile without a base url is a usage error") {
    testing::TempDir dir;
    testing::write_text(dir / "p.ini", "[backend]\nmodel = m\n");
    try {
        load_http_profile(dir / "p.ini");
        FAIL("expected failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::usage);
    }
}

TEST_CASE("http embedding provider batches requests") {
    FakeEndpoint ep;
    HttpEmbeddingProvider emb(ep.url(), "/embed", 2);
    std::vector<std::string> texts{"a", "bb", "ccc"};
    auto rows = emb.embed(texts);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2][0] == 3.0f);
    CHECK(emb.dimension() == 2);
}
