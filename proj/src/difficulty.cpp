#include "longtail/difficulty.hpp"

#include <algorithm>

#include "longtail/random.hpp"

namespace longtail {

PropertyHistogram property_histogram(std::span<const Candidate> dataset) {
    PropertyHistogram h;
    for (const auto& c : dataset) ++h[c.triplet.property];
    return h;
}

namespace {

using Groups = std::map<std::string, std::vector<std::size_t>>;

Groups group_by_property(std::span<const Candidate> ds) {
    Groups g;
    for (std::size_t i = 0; i < ds.size(); ++i) g[ds[i].triplet.property].push_back(i);
    return g;
}

// Keep `target[p]` items of every group, selected by a per-property stream.
std::vector<Candidate> select(std::span<const Candidate> ds, const Groups& groups,
                              const std::map<std::string, std::size_t>& target, std::uint64_t seed,
                              std::string_view side) {
    std::vector<bool> keep(ds.size(), false);
    for (const auto& [p, idx] : groups) {
        auto it = target.find(p);
        if (it == target.end() || it->second == 0) continue;
        if (it->second >= idx.size()) {
            for (auto i : idx) keep[i] = true;
            continue;
        }
        SeededRng rng(derive_seed(seed, std::string(side) + "/" + p));
        for (auto k : rng.sample_indices(idx.size(), it->second)) keep[idx[k]] = true;
    }
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (keep[i]) out.push_back(ds[i]);
    }
    return out;
}

}  // namespace

MatchedPair match_distributions(std::span<const Candidate> a, std::span<const Candidate> b, std::uint64_t seed,
                                std::optional<std::size_t> total_cap) {
    auto ga = group_by_property(a);
    auto gb = group_by_property(b);

    std::map<std::string, std::size_t> target;
    for (const auto& [p, idx] : ga) {
        if (auto it = gb.find(p); it != gb.end()) target.emplace(p, std::min(idx.size(), it->second.size()));
    }

    std::size_t total = 0;
    for (const auto& [p, n] : target) total += n;
    if (total_cap && total > *total_cap) {
        std::vector<const std::string*> slots;
        slots.reserve(total);
        for (const auto& [p, n] : target) slots.insert(slots.end(), n, &p);
        SeededRng rng(derive_seed(seed, "cap"));
        std::map<std::string, std::size_t> capped;
        for (auto k : rng.sample_indices(slots.size(), *total_cap)) ++capped[*slots[k]];
        target = std::move(capped);
    }

    return MatchedPair{select(a, ga, target, seed, "a"), select(b, gb, target, seed, "b")};
}

std::vector<DifficultyRow> difficulty_rows(const PropertyHistogram& before, const PropertyHistogram& after,
                                           const std::map<std::string, std::size_t>& answer_spaces) {
    std::vector<DifficultyRow> rows;
    for (const auto& [p, n] : before) {
        DifficultyRow r;
        r.property_id = p;
        r.count_before = n;
        if (auto it = after.find(p); it != after.end()) r.count_after = it->second;
        if (auto it = answer_spaces.find(p); it != answer_spaces.end()) r.answer_space = it->second;
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace longtail
