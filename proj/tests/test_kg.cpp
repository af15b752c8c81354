#include <map>

#include "doctest.h"
#include "longtail/error.hpp"
#include "longtail/kg.hpp"
#include "support.hpp"

using namespace longtail;
using testing::ent;
using testing::lit;

TEST_CASE("ingest counts subject-role degree and dedups rows") {
    testing::TempDir dir;
    testing::write_text(dir / "t.tsv",
                        "# header\n"
                        "Q1\tP1\tQ2\tentity\n"
                        "Q1\tP2\tQ3\tentity\r\n"
                        "\n"
                        "Q1\tP3\t1944\tliteral\n"
                        "Q1\tP1\tQ2\tentity\n"
                        "Q1\tP1\tQ2\tentity\n");
    IngestReport rep;
    auto kg = KnowledgeGraph::ingest(dir / "t.tsv", IngestMode::lenient, nullptr, &rep);
    CHECK(kg.degree("Q1") == 3);
    CHECK(kg.degree("Q2") == 0);
    CHECK(kg.degree("nope") == 0);
    CHECK(rep.rows == 5);
    CHECK(rep.duplicates == 2);
    CHECK(kg.triplet_count() == 3);
}

TEST_CASE("empty file gives an empty graph") {
    testing::TempDir dir;
    testing::write_text(dir / "t.tsv", "");
    auto kg = KnowledgeGraph::ingest(dir / "t.tsv");
    CHECK(kg.triplet_count() == 0);
    CHECK(kg.degree("Q1") == 0);
    CHECK(kg.degree_histogram().empty());
}

TEST_CASE("malformed rows fail with the line number") {
    testing::TempDir dir;
    testing::write_text(dir / "t.tsv", "Q1\tP1\tQ2\tentity\nQ1\tP1\tQ2\n");
    try {
        KnowledgeGraph::ingest(dir / "t.tsv");
        FAIL("expected a data error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    testing::write_text(dir / "u.tsv", "Q1\tP1\tQ2\tthing\n");
    CHECK_THROWS_AS(KnowledgeGraph::ingest(dir / "u.tsv"), Error);
}

TEST_CASE("strict and lenient handling of dangling ids") {
    testing::TempDir dir;
    testing::write_text(dir / "t.tsv", "Q1\tP1\tQ2\tentity\nQ1\tP1\tQ9\tentity\nQ1\tP7\tx\tliteral\n");
    Catalog cat;
    cat.add_entity({"Q1", "one", {}});
    cat.add_entity({"Q2", "two", {}});
    cat.add_property({"P1", "rel"});
    IngestReport rep;
    auto kg = KnowledgeGraph::ingest(dir / "t.tsv", IngestMode::lenient, &cat, &rep);
    CHECK(kg.triplet_count() == 1);
    CHECK(rep.skipped_unresolved == 2);
    CHECK_THROWS_AS(KnowledgeGraph::ingest(dir / "t.tsv", IngestMode::strict, &cat), Error);
}

TEST_CASE("catalog loading keeps aliases apart from the label") {
    testing::TempDir dir;
    testing::write_text(dir / "e.jsonl",
                        R"({"id":"Q362","label":"World War II","aliases":["WWII","WW2","World War II","WW2"]})"
                        "\n"
                        R"({"id":"Q8684","label":"Seoul"})"
                        "\n");
    testing::write_text(dir / "p.jsonl", R"({"id":"P607","label":"conflict"})"
                                         "\n");
    Catalog cat;
    cat.load_entities(dir / "e.jsonl");
    cat.load_properties(dir / "p.jsonl");
    REQUIRE(cat.entity("Q362"));
    CHECK(cat.entity("Q362")->aliases == std::vector<std::string>{"WW2", "WWII"});
    CHECK(cat.entity("Q8684")->aliases.empty());
    CHECK(cat.property("P607")->label == "conflict");
    CHECK(cat.object_surface(ent("Q1", "P607", "Q362")) == "World War II");
    CHECK(cat.object_surface(lit("Q1", "P569", "1944")) == "1944");
    CHECK_FALSE(cat.object_surface(ent("Q1", "P607", "Q0")));
}

TEST_CASE("triplets_of is sorted by property then object") {
    std::vector<Triplet> ts{ent("Q1", "P2", "Q5"), ent("Q1", "P1", "Q9"), ent("Q1", "P1", "Q3"), ent("Q2", "P1", "Q1")};
    auto kg = KnowledgeGraph::from_triplets(ts);
    auto got = kg.triplets_of("Q1");
    REQUIRE(got.size() == 3);
    CHECK(got[0] == ent("Q1", "P1", "Q3"));
    CHECK(got[1] == ent("Q1", "P1", "Q9"));
    CHECK(got[2] == ent("Q1", "P2", "Q5"));
    CHECK(kg.triplets_of("unknown").empty());
}

TEST_CASE("remove_holdout updates degrees and is idempotent") {
    std::vector<Triplet> ts;
    for (int i = 0; i < 5; ++i) ts.push_back(ent("Q1", "P1", "Q" + std::to_string(10 + i)));
    auto kg = KnowledgeGraph::from_triplets(ts);
    std::vector<Triplet> two{ts[0], ts[3]};
    auto r = kg.remove_holdout(two);
    CHECK(r.removed == 2);
    CHECK(kg.degree("Q1") == 3);
    auto again = kg.remove_holdout(two);
    CHECK(again.removed == 0);
    CHECK(again.absent == 2);
    kg.remove_holdout(ts);
    CHECK(kg.degree("Q1") == 0);
    CHECK(kg.subject_count() == 0);
}

TEST_CASE("histogram bins") {
    std::vector<Triplet> ts;
    for (int i = 0; i < 4; ++i) ts.push_back(ent("S" + std::to_string(i), "P", "O"));
    auto kg = KnowledgeGraph::from_triplets(ts);
    auto h = kg.degree_histogram();
    REQUIRE(h.size() == 1);
    CHECK(h[0] == DegreeBin{1, 1, 4});

    HistogramBinning b;
    CHECK(bin_for_degree(100, b).lo == 100);
    CHECK(bin_for_degree(101, b).lo == 101);
    CHECK(bin_for_degree(101, b).hi == 128);
    CHECK(bin_for_degree(128, b).hi == 128);
    CHECK(bin_for_degree(129, b).lo == 129);
    CHECK(bin_for_degree(129, b).hi == 256);
}

TEST_CASE("answer space counts distinct objects per property") {
    std::vector<Triplet> ts;
    for (int i = 0; i < 30; ++i) ts.push_back(ent("C" + std::to_string(i), "P1622", i % 3 ? "Q_right" : "Q_left"));
    ts.push_back(ent("C0", "P9", "X"));
    auto kg = KnowledgeGraph::from_triplets(ts);
    CHECK(kg.answer_space("P1622") == 2);
    CHECK(kg.answer_space("P9") == 1);
    CHECK(kg.answer_space("P0") == 0);
}

TEST_CASE("random graphs agree with linear-scan oracles") {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 20; ++round) {
        auto raw = testing::random_triplets(rng, 60, 500, 8);
        auto kg = KnowledgeGraph::from_triplets(raw);
        std::set<Triplet> uniq(raw.begin(), raw.end());
        CHECK(kg.triplet_count() == uniq.size());

        std::map<std::string, std::size_t> deg;
        std::map<std::string, std::set<std::string>> objects;
        for (const auto& t : uniq) {
            ++deg[t.subject];
            objects[t.property].insert(t.object);
        }
        for (int e = 0; e < 60; ++e) {
            auto id = "E" + std::to_string(e);
            CHECK(kg.degree(id) == deg[id]);
            std::vector<Triplet> expect;
            for (const auto& t : uniq) {
                if (t.subject == id) expect.push_back(t);
            }
            auto got = kg.triplets_of(id);
            CHECK(got.size() == kg.degree(id));
            CHECK(std::set<Triplet>(got.begin(), got.end()) == std::set<Triplet>(expect.begin(), expect.end()));
        }
        for (const auto& [p, objs] : objects) CHECK(kg.answer_space(p) == objs.size());

        std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> tally;
        for (const auto& [s, d] : deg) {
            auto b = bin_for_degree(d, {});
            ++tally[{b.lo, b.hi}];
        }
        std::size_t total = 0;
        auto hist = kg.degree_histogram();
        CHECK(hist.size() == tally.size());
        for (const auto& b : hist) {
            CHECK(tally[{b.lo, b.hi}] == b.count);
            total += b.count;
        }
        CHECK(total == kg.subject_count());
    }
}

TEST_CASE("holdout removal equals ingesting without the removed rows") {
    std::mt19937_64 rng(5);
    testing::TempDir dir;
    for (int round = 0; round < 10; ++round) {
        auto raw = testing::random_triplets(rng, 40, 300, 6);
        std::vector<Triplet> holdout;
        std::vector<Triplet> rest;
        std::set<Triplet> held;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (i % 4 == 0) {
                holdout.push_back(raw[i]);
                held.insert(raw[i]);
            }
        }
        for (const auto& t : raw) {
            if (!held.contains(t)) rest.push_back(t);
        }
        testing::write_text(dir / "all.tsv", testing::to_tsv(raw));
        testing::write_text(dir / "rest.tsv", testing::to_tsv(rest));
        auto kg = KnowledgeGraph::ingest(dir / "all.tsv");
        kg.remove_holdout(holdout);
        auto expect = KnowledgeGraph::ingest(dir / "rest.tsv");
        CHECK(kg == expect);
        CHECK(kg.degree_histogram() == expect.degree_histogram());
    }
}

TEST_CASE("ingest is deterministic") {
    std::mt19937_64 rng(3);
    testing::TempDir dir;
    testing::write_text(dir / "t.tsv", testing::to_tsv(testing::random_triplets(rng, 50, 400, 5)));
    auto a = KnowledgeGraph::ingest(dir / "t.tsv");
    auto b = KnowledgeGraph::ingest(dir / "t.tsv");
    CHECK(a == b);
    CHECK(a.degree_histogram() == b.degree_histogram());
}
