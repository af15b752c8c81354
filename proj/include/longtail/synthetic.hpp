#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

namespace longtail {

// A small generated knowledge graph with a long-tailed subject degree
// distribution, a matching passage corpus and a ready-to-run config.ini.
struct SyntheticOptions {
    std::size_t entities = 1000;
    std::uint64_t seed = 7;
    double zipf_exponent = 1.8;
    std::size_t max_degree = 200;
    double fact_coverage = 0.6;  // share of facts mentioned somewhere in the corpus
    std::size_t distractors = 200;
};

struct SyntheticSummary {
    std::size_t entities = 0;
    std::size_t triplets = 0;
    std::size_t passages = 0;
};

// Writes triplets.tsv, entities.jsonl, properties.jsonl, corpus.jsonl and
// config.ini into `dir`. Same options, same bytes.
SyntheticSummary write_synthetic(const std::filesystem::path& dir, const SyntheticOptions& options = {});

}  // namespace longtail
