#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longtail/kg.hpp"
#include "longtail/retrieval.hpp"

namespace longtail {

enum class CombineRule { similarity_only, convex };

std::string_view to_string(CombineRule r);
CombineRule parse_combine_rule(std::string_view s);

struct RerankConfig {
    std::size_t max_depth = 2;
    std::size_t max_paths = 64;
    CombineRule combine = CombineRule::similarity_only;
    double alpha = 0.5;  // weight of the normalized retriever score in convex mode
};

void validate(const RerankConfig& cfg);

// A walk starting at `subject`; hops[i].subject is the previous node.
struct KgPath {
    std::string subject;
    std::vector<Triplet> hops;

    bool operator==(const KgPath&) const = default;
};

// Simple paths of 1..max_depth hops out of `subject`, breadth first, ordered
// by hop count and then lexicographically by (property, object) ids; at most
// max_paths of them. Literal objects end a path.
std::vector<KgPath> find_paths(const KnowledgeGraph& kg, std::string_view subject, const RerankConfig& cfg);

// Lowercase surface forms of subject, each property and each object, joined
// by single spaces. nullopt when some label is missing.
std::optional<std::string> verbalize(const KgPath& path, const Catalog& catalog);

struct RerankedEntry {
    std::string passage_id;
    double orig_score = 0.0;
    double kg_score = 0.0;
    double final_score = 0.0;
};

struct RerankResult {
    RankedList ranked;  // scores are the final combined scores
    std::vector<RerankedEntry> entries;
    std::size_t paths_used = 0;
    bool no_paths = false;  // input order returned unchanged
};

// KG score of a passage is the max cosine between it and any verbalization.
// similarity_only sorts by KG score; convex sorts by
// alpha * minmax(orig) + (1 - alpha) * kg. Ties keep the original rank.
RerankResult rerank(const RankedList& ranked, std::span<const std::string> verbalizations,
                    EmbeddingProvider& provider, const Corpus& corpus, const RerankConfig& cfg);

Json rerank_result_to_json(const RerankResult& r);

struct RecallDelta {
    std::size_t k = 0;
    double before = 0.0;
    double after = 0.0;
    double delta = 0.0;
};

std::vector<RecallDelta> rerank_report(std::span<const QAItem> items, const std::map<std::string, RankedList>& before,
                                       const std::map<std::string, RankedList>& after, const Corpus& corpus,
                                       std::span<const std::size_t> ks);

}  // namespace longtail
