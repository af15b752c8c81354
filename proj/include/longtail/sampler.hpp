#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longtail/kg.hpp"

namespace longtail {

// Inclusive degree range naming one tail population.
struct DegreeBucket {
    std::string name;
    std::uint64_t min_degree = 0;
    std::uint64_t max_degree = 0;

    bool contains(std::uint64_t degree) const { return degree >= min_degree && degree <= max_degree; }
    bool operator==(const DegreeBucket&) const = default;
};

// fine = [1, 2], coarse = [15, 100]; degrees 3..14 stay unassigned.
std::vector<DegreeBucket> default_buckets();

// Rejects empty or duplicate names, min > max and overlapping ranges.
void validate_buckets(std::span<const DegreeBucket> buckets);

// Name of the bucket holding degree(entity), if any.
std::optional<std::string> classify(const KnowledgeGraph& kg, std::string_view entity,
                                    std::span<const DegreeBucket> buckets);

// Subject entities whose degree lies in the bucket, sorted by id. Entities
// with degree 0 are never members since they have no triplets.
std::vector<std::string> bucket_members(const KnowledgeGraph& kg, const DegreeBucket& bucket);

struct SampleSpec {
    DegreeBucket bucket;
    std::optional<std::size_t> entity_count;  // nullopt = all members
    std::uint64_t seed = 0;
};

struct SampleResult {
    std::vector<std::string> entities;  // sorted by id
    std::size_t population = 0;
    bool short_population = false;  // entity_count exceeded the population
};

// Uniform sample without replacement over the id-sorted member list.
SampleResult sample_entities(const KnowledgeGraph& kg, const SampleSpec& spec);

// A triplet selected for question generation, tagged with its tail bucket.
struct Candidate {
    Triplet triplet;
    std::string bucket;

    auto operator<=>(const Candidate&) const = default;
};

Json candidate_to_json(const Candidate& c);
Candidate candidate_from_json(const Json& j, const std::string& where);
std::vector<Candidate> read_candidates(const std::filesystem::path& path);
std::string candidates_to_jsonl(std::span<const Candidate> candidates);

// All triplets of each entity, in input entity order then triplets_of order.
std::vector<Candidate> extract_candidates(const KnowledgeGraph& kg, std::span<const std::string> entities,
                                          const std::string& bucket);

}  // namespace longtail
