#include "doctest.h"
#include "longtail/backend.hpp"
#include "longtail/config.hpp"
#include "longtail/error.hpp"
#include "support.hpp"

using namespace longtail;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::string& ini, const std::vector<std::string>& overrides = {}) {
    try {
        parse_config(ini, "/base", overrides);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("config accepted");
    return ErrorKind::data;
}

const std::string minimal = "[paths]\ntriplets = kg/triplets.tsv\n";

}  // namespace

TEST_CASE("defaults and relative path resolution") {
    auto c = parse_config(minimal, "/base");
    CHECK(c.triplets == fs::path("/base/kg/triplets.tsv"));
    CHECK(c.output_dir == fs::path("/base/out"));
    CHECK(c.ledger == fs::path("/base/out/filter_ledger.jsonl"));
    CHECK(c.buckets == default_buckets());
    CHECK(c.match_buckets == std::vector<std::string>{c.buckets[0].name, c.buckets[1].name});
    CHECK(c.top_k == 100);
    CHECK(c.generation_backend == "mock");
    CHECK(c.answer_backend == "echo_gold");
    CHECK_FALSE(c.difficulty_cap);

    auto abs = parse_config("[paths]\ntriplets = /data/t.tsv\noutput_dir = /tmp/o\n", "/base");
    CHECK(abs.triplets == fs::path("/data/t.tsv"));
    CHECK(abs.ledger == fs::path("/tmp/o/filter_ledger.jsonl"));
}

TEST_CASE("custom buckets keep file order and per-bucket counts") {
    auto c = parse_config(minimal + "[buckets]\nrare = 1-5\ncommon = 50-1000\n[sample]\nentity_count_rare = 7\n"
                                    "entity_count = 3\n[difficulty]\nmatch = common, rare\ncap = 10\n",
                          "/base");
    REQUIRE(c.buckets.size() == 2);
    CHECK(c.buckets[0] == DegreeBucket{"rare", 1, 5});
    CHECK(c.buckets[1] == DegreeBucket{"common", 50, 1000});
    CHECK(c.count_for("rare") == std::optional<std::size_t>(7));
    CHECK(c.count_for("common") == std::optional<std::size_t>(3));
    CHECK(c.match_buckets == std::vector<std::string>{"common", "rare"});
    CHECK(c.difficulty_cap == std::optional<std::size_t>(10));
}

TEST_CASE("overrides apply and change the digest") {
    auto a = parse_config(minimal, "/base");
    auto b = parse_config(minimal, "/base", {"retrieval.k=5"});
    auto a2 = parse_config(minimal, "/base");
    CHECK(b.top_k == 5);
    CHECK(a.digest == a2.digest);
    CHECK(a.digest != b.digest);
    CHECK(a.digest.size() == 64);
}

TEST_CASE("invalid configs are usage errors") {
    CHECK(kind_of("[paths]\nentities = e.jsonl\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[retrieval]\nbogus = 1\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[nonsense]\nx = 1\n") == ErrorKind::usage);
    CHECK(kind_of(minimal, {"retrieval.k"}) == ErrorKind::usage);
    CHECK(kind_of(minimal, {"retrieval.k=0"}) == ErrorKind::usage);
    CHECK(kind_of(minimal, {"retrieval.k=many"}) == ErrorKind::usage);
    CHECK(kind_of(minimal + "[buckets]\na = 5-1\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[buckets]\na = 1-10\nb = 5-20\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[difficulty]\nmatch = coarse, coarse\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[generate]\nbackend = http\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[answer]\ncontext = both\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[retrieval]\nretriever = dense\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[rerank]\nalpha = 2\n") == ErrorKind::usage);
    CHECK(kind_of(minimal + "[sample]\nentity_count_nope = 3\n") == ErrorKind::usage);
}

TEST_CASE("load_config anchors paths at the config file") {
    testing::TempDir dir;
    fs::create_directories(dir / "cfg");
    testing::write_text(dir / "cfg" / "c.ini", minimal);
    auto c = load_config(dir / "cfg" / "c.ini");
    CHECK(c.triplets == dir / "cfg" / "kg/triplets.tsv");
    CHECK_THROWS_AS(load_config(dir / "missing.ini"), Error);
}

TEST_CASE("shipped example config and blocklist load") {
    const fs::path data(LONGTAIL_DATA_DIR);
    auto c = load_config(data / "config.example.ini");
    CHECK(c.buckets == default_buckets());
    CHECK(c.heuristics.blocklist == std::vector<std::string>{"instance of", "subclass of", "part of"});
    CHECK(c.vectors == data / "out/corpus.vec");
    auto p = load_http_profile(data / "completion.example.ini");
    CHECK(p.path == "/v1/completions");
    CHECK(p.max_tokens == 64);
}
