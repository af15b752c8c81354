#include <algorithm>
#include <map>

#include "doctest.h"
#include "longtail/error.hpp"
#include "longtail/sampler.hpp"
#include "support.hpp"

using namespace longtail;
using testing::ent;

namespace {

KnowledgeGraph graph_with_degrees(const std::vector<std::size_t>& degrees) {
    std::vector<Triplet> ts;
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        for (std::size_t j = 0; j < degrees[i]; ++j) {
            ts.push_back(ent("E" + std::to_string(i), "P" + std::to_string(j % 3), "O" + std::to_string(j)));
        }
    }
    return KnowledgeGraph::from_triplets(ts);
}

}  // namespace

TEST_CASE("default buckets follow the fine and coarse bounds") {
    auto kg = graph_with_degrees({2, 15, 100, 101, 7, 1});
    auto b = default_buckets();
    CHECK(classify(kg, "E0", b) == "fine");
    CHECK(classify(kg, "E1", b) == "coarse");
    CHECK(classify(kg, "E2", b) == "coarse");
    CHECK_FALSE(classify(kg, "E3", b));
    CHECK_FALSE(classify(kg, "E4", b));
    CHECK(classify(kg, "E5", b) == "fine");
    CHECK_FALSE(classify(kg, "missing", b));
}

TEST_CASE("overlapping or malformed buckets are rejected") {
    std::vector<DegreeBucket> overlap{{"a", 1, 5}, {"b", 5, 9}};
    CHECK_THROWS_AS(validate_buckets(overlap), Error);
    std::vector<DegreeBucket> inverted{{"a", 5, 1}};
    CHECK_THROWS_AS(validate_buckets(inverted), Error);
    std::vector<DegreeBucket> dup{{"a", 1, 2}, {"a", 3, 4}};
    CHECK_THROWS_AS(validate_buckets(dup), Error);
    std::vector<DegreeBucket> ok{{"a", 1, 2}, {"b", 3, 4}};
    CHECK_NOTHROW(validate_buckets(ok));
}

TEST_CASE("sampling all members and short populations") {
    std::vector<std::size_t> degrees(10, 1);
    auto kg = graph_with_degrees(degrees);
    DegreeBucket fine{"fine", 1, 2};
    auto all = sample_entities(kg, {fine, std::nullopt, 1});
    CHECK(all.entities.size() == 10);
    CHECK(all.population == 10);
    CHECK_FALSE(all.short_population);
    auto over = sample_entities(kg, {fine, 50, 1});
    CHECK(over.entities.size() == 10);
    CHECK(over.short_population);
    CHECK(std::is_sorted(over.entities.begin(), over.entities.end()));
}

TEST_CASE("same seed, same sample; different seeds overlap like a hypergeometric draw") {
    std::vector<std::size_t> degrees(1000, 1);
    auto kg = graph_with_degrees(degrees);
    DegreeBucket fine{"fine", 1, 2};
    auto a = sample_entities(kg, {fine, 100, 42});
    auto b = sample_entities(kg, {fine, 100, 42});
    CHECK(a.entities == b.entities);

    // Expected overlap of two independent 100-of-1000 draws is 10.
    double total = 0;
    const int repeats = 200;
    for (int r = 0; r < repeats; ++r) {
        auto x = sample_entities(kg, {fine, 100, 1000 + static_cast<std::uint64_t>(r)});
        auto y = sample_entities(kg, {fine, 100, 5000 + static_cast<std::uint64_t>(r)});
        std::vector<std::string> both;
        std::set_intersection(x.entities.begin(), x.entities.end(), y.entities.begin(), y.entities.end(),
                              std::back_inserter(both));
        total += static_cast<double>(both.size());
    }
    const double mean = total / repeats;
    CHECK(mean > 9.0);
    CHECK(mean < 11.0);
}

TEST_CASE("extract_candidates is the union of triplets_of") {
    std::mt19937_64 rng(9);
    for (int round = 0; round < 10; ++round) {
        auto raw = testing::random_triplets(rng, 80, 400, 7);
        auto kg = KnowledgeGraph::from_triplets(raw);
        auto members = bucket_members(kg, {"b", 3, 8});
        auto cands = extract_candidates(kg, members, "b");
        std::set<Triplet> expect;
        std::size_t degree_sum = 0;
        for (const auto& m : members) degree_sum += kg.degree(m);
        for (const auto& t : raw) {
            if (std::find(members.begin(), members.end(), t.subject) != members.end()) expect.insert(t);
        }
        std::set<Triplet> got;
        for (const auto& c : cands) {
            got.insert(c.triplet);
            CHECK(c.bucket == "b");
            CHECK(kg.degree(c.triplet.subject) >= 3);
            CHECK(kg.degree(c.triplet.subject) <= 8);
        }
        CHECK(got == expect);
        CHECK(cands.size() == degree_sum);
    }
}

TEST_CASE("single entity of degree two yields its two triplets") {
    auto kg = graph_with_degrees({2});
    std::vector<std::string> one{"E0"};
    auto c = extract_candidates(kg, one, "fine");
    REQUIRE(c.size() == 2);
    CHECK(c[0].triplet.subject == "E0");
}

TEST_CASE("candidate files round-trip") {
    testing::TempDir dir;
    std::vector<Candidate> cs{{ent("Q1", "P1", "Q2"), "fine"}, {testing::lit("Q1", "P2", "1944"), "fine"}};
    testing::write_text(dir / "c.jsonl", candidates_to_jsonl(cs));
    CHECK(read_candidates(dir / "c.jsonl") == cs);
    auto j = candidate_to_json(cs[1]);
    CHECK(j["object_kind"] == "literal");
    CHECK(j["bucket"] == "fine");
}
