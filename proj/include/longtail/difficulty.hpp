#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longtail/kg.hpp"
#include "longtail/sampler.hpp"

namespace longtail {

using PropertyHistogram = std::map<std::string, std::size_t>;

PropertyHistogram property_histogram(std::span<const Candidate> dataset);

struct MatchedPair {
    std::vector<Candidate> first;
    std::vector<Candidate> second;
};

// Equalizes per-property triplet counts: every property present in both
// inputs keeps min(count_a, count_b) triplets on each side, chosen uniformly
// without replacement; properties missing from either side are dropped.
// Survivors keep their input order, which makes the operation idempotent.
//
// `total_cap` optionally shrinks both outputs to at most that many triplets
// by drawing property slots at random, so the per-property counts stay equal.
MatchedPair match_distributions(std::span<const Candidate> a, std::span<const Candidate> b, std::uint64_t seed,
                                std::optional<std::size_t> total_cap = std::nullopt);

// One line of the before/after difficulty report.
struct DifficultyRow {
    std::string property_id;
    std::size_t count_before = 0;
    std::size_t count_after = 0;
    std::size_t answer_space = 0;
};

std::vector<DifficultyRow> difficulty_rows(const PropertyHistogram& before, const PropertyHistogram& after,
                                           const std::map<std::string, std::size_t>& answer_spaces);

}  // namespace longtail
