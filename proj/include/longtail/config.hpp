#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "longtail/answering.hpp"
#include "longtail/kg.hpp"
#include "longtail/property_filter.hpp"
#include "longtail/question_gen.hpp"
#include "longtail/rerank.hpp"
#include "longtail/retrieval.hpp"
#include "longtail/sampler.hpp"

namespace longtail {

// Every pipeline setting. Loaded from an INI file whose relative paths are
// resolved against the file's directory; any key can be overridden with a
// "section.key=value" string.
struct PipelineConfig {
    std::filesystem::path base_dir;

    // [paths]
    std::filesystem::path triplets;
    std::filesystem::path entities;
    std::filesystem::path properties;
    std::filesystem::path corpus;
    std::filesystem::path vectors;
    std::filesystem::path vector_ids;
    std::filesystem::path output_dir;
    std::filesystem::path ledger;       // default <output_dir>/filter_ledger.jsonl
    std::filesystem::path annotations;  // optional
    std::filesystem::path blocklist;    // optional
    std::filesystem::path static_dir;   // optional

    // [ingest]
    IngestMode ingest_mode = IngestMode::lenient;

    // [buckets] name = lo-hi, in file order
    std::vector<DegreeBucket> buckets = default_buckets();

    // [sample]
    std::uint64_t sample_seed = 1;
    std::optional<std::size_t> entity_count;                          // entity_count
    std::map<std::string, std::optional<std::size_t>> bucket_counts;  // entity_count_<bucket>

    // [filter]
    bool auto_apply_heuristics = false;
    std::size_t screen_sample_size = 20;
    std::uint64_t filter_seed = 2;
    HeuristicConfig heuristics;

    // [difficulty]
    std::vector<std::string> match_buckets;  // two bucket names; default the first two
    std::uint64_t difficulty_seed = 3;
    std::optional<std::size_t> difficulty_cap;

    // [generate]
    std::string generation_backend = "mock";  // mock | http
    std::filesystem::path generation_profile;
    PromptMode prompt_mode = PromptMode::full_triplet;
    int generation_attempts = 3;

    // [answer]
    std::string answer_backend = "echo_gold";  // echo_gold | http
    std::filesystem::path answer_profile;
    AnswerMode answer_mode = AnswerMode::closed_book;
    std::string context_source = "reranked";  // retrieved | reranked
    int answer_attempts = 3;

    // [retrieval]
    std::string retriever = "bm25";  // bm25 | dense
    std::size_t top_k = 100;
    Bm25Params bm25;
    std::vector<std::size_t> recall_ks{1, 20, 50, 100};
    std::string embedding = "hashing";  // hashing | http
    std::size_t embedding_dim = 1024;
    std::string embedding_url;
    std::string embedding_path = "/embed";

    // [rerank]
    RerankConfig rerank;

    // [evaluate]
    std::size_t miss_sample_size = 100;
    std::uint64_t evaluate_seed = 4;

    // [serve]
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t page_size = 20;
    std::size_t card_samples = 5;

    // SHA-256 over the canonical "section.key=value" listing after overrides.
    std::string digest;

    std::optional<std::size_t> count_for(const std::string& bucket) const;
    const DegreeBucket& bucket(const std::string& name) const;
};

PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Same as load_config but from INI text; `base_dir` anchors relative paths.
PipelineConfig parse_config(const std::string& ini_text, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides = {});

}  // namespace longtail
