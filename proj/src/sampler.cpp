#include "longtail/sampler.hpp"

#include <algorithm>
#include <set>

#include "longtail/error.hpp"
#include "longtail/random.hpp"

namespace longtail {

std::vector<DegreeBucket> default_buckets() {
    return {DegreeBucket{"coarse", 15, 100}, DegreeBucket{"fine", 1, 2}};
}

void validate_buckets(std::span<const DegreeBucket> buckets) {
    std::set<std::string> names;
    for (const auto& b : buckets) {
        if (b.name.empty()) fail(ErrorKind::usage, "degree bucket with empty name");
        if (!names.insert(b.name).second) fail(ErrorKind::usage, "duplicate degree bucket name " + b.name);
        if (b.min_degree > b.max_degree) {
            fail(ErrorKind::usage, "degree bucket " + b.name + " has min_degree > max_degree");
        }
    }
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        for (std::size_t j = i + 1; j < buckets.size(); ++j) {
            const auto& a = buckets[i];
            const auto& b = buckets[j];
            if (a.min_degree <= b.max_degree && b.min_degree <= a.max_degree) {
                fail(ErrorKind::usage, "degree buckets " + a.name + " and " + b.name + " overlap");
            }
        }
    }
}

std::optional<std::string> classify(const KnowledgeGraph& kg, std::string_view entity,
                                    std::span<const DegreeBucket> buckets) {
    const auto d = kg.degree(entity);
    for (const auto& b : buckets) {
        if (b.contains(d)) return b.name;
    }
    return std::nullopt;
}

std::vector<std::string> bucket_members(const KnowledgeGraph& kg, const DegreeBucket& bucket) {
    std::vector<std::string> out;
    for (auto& s : kg.subjects()) {
        if (bucket.contains(kg.degree(s))) out.push_back(std::move(s));
    }
    return out;
}

SampleResult sample_entities(const KnowledgeGraph& kg, const SampleSpec& spec) {
    SampleResult r;
    auto members = bucket_members(kg, spec.bucket);
    r.population = members.size();
    if (!spec.entity_count || *spec.entity_count >= members.size()) {
        r.short_population = spec.entity_count && *spec.entity_count > members.size();
        r.entities = std::move(members);
        return r;
    }
    SeededRng rng(spec.seed);
    for (auto idx : rng.sample_indices(members.size(), *spec.entity_count)) r.entities.push_back(members[idx]);
    std::sort(r.entities.begin(), r.entities.end());
    return r;
}

Json candidate_to_json(const Candidate& c) {
    auto j = triplet_to_json(c.triplet);
    j["bucket"] = c.bucket;
    return j;
}

Candidate candidate_from_json(const Json& j, const std::string& where) {
    Candidate c;
    c.triplet = triplet_from_json(j, where);
    c.bucket = require_string(j, "bucket", where);
    return c;
}

std::vector<Candidate> read_candidates(const std::filesystem::path& path) {
    std::vector<Candidate> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        out.push_back(candidate_from_json(j, path.string() + ":" + std::to_string(line)));
    });
    return out;
}

std::string candidates_to_jsonl(std::span<const Candidate> candidates) {
    std::string out;
    for (const auto& c : candidates) out += dump_line(candidate_to_json(c)) + "\n";
    return out;
}

std::vector<Candidate> extract_candidates(const KnowledgeGraph& kg, std::span<const std::string> entities,
                                          const std::string& bucket) {
    std::vector<Candidate> out;
    for (const auto& e : entities) {
        for (auto& t : kg.triplets_of(e)) out.push_back(Candidate{std::move(t), bucket});
    }
    return out;
}

}  // namespace longtail
