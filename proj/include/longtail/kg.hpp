#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "longtail/jsonl.hpp"

namespace longtail {

enum class ObjectKind { entity, literal };

std::string_view to_string(ObjectKind kind);
ObjectKind parse_object_kind(std::string_view s);  // throws data error

struct Triplet {
    std::string subject;
    std::string property;
    std::string object;
    ObjectKind object_kind = ObjectKind::entity;

    auto operator<=>(const Triplet&) const = default;
};

// {"subject", "property", "object", "object_kind"}
Json triplet_to_json(const Triplet& t);
Triplet triplet_from_json(const Json& j, const std::string& where);

struct Entity {
    std::string id;
    std::string label;
    std::vector<std::string> aliases;  // sorted, unique, never contains label
};

struct Property {
    std::string id;
    std::string label;
};

// Labels and aliases, loaded apart from the triplets so one triplet file can
// be re-labeled.
class Catalog {
public:
    void add_entity(Entity e);
    void add_property(Property p);

    // Line-delimited {"id","label","aliases":[...]} / {"id","label"}.
    void load_entities(const std::filesystem::path& path);
    void load_properties(const std::filesystem::path& path);

    const Entity* entity(std::string_view id) const;
    const Property* property(std::string_view id) const;

    // Surface form of a triplet's object: entity label or the literal itself.
    std::optional<std::string> object_surface(const Triplet& t) const;

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t property_count() const { return properties_.size(); }

private:
    std::unordered_map<std::string, Entity> entities_;
    std::unordered_map<std::string, Property> properties_;
};

enum class IngestMode { strict, lenient };

struct IngestReport {
    std::size_t rows = 0;                // data rows read (comments/blank excluded)
    std::size_t stored = 0;              // distinct triplets kept
    std::size_t duplicates = 0;          // identical rows collapsed
    std::size_t skipped_unresolved = 0;  // lenient mode only
};

struct RemovalResult {
    std::size_t removed = 0;
    std::size_t absent = 0;
};

struct HistogramBinning {
    // Degrees 1..exact_up_to get one bin each; larger degrees fall into
    // (2^(k-1), 2^k] bins, the first one starting at exact_up_to + 1.
    std::uint64_t exact_up_to = 100;
};

struct DegreeBin {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;
    std::uint64_t count = 0;
    bool operator==(const DegreeBin&) const = default;
};

// An outgoing edge of a subject. Ordered by property id, then object.
struct Edge {
    std::string property;
    std::string object;
    ObjectKind object_kind = ObjectKind::entity;

    auto operator<=>(const Edge&) const = default;
};

// Triplet store indexed by subject. Degree is the subject-role count only.
//
// Built single-threaded; afterwards const member functions may be called
// concurrently. remove_holdout must be serialized by the caller.
class KnowledgeGraph {
public:
    // Tab-separated rows: subject, property, object, object_kind. Lines
    // starting with '#' are ignored. Malformed rows always fail with the line
    // number. When `catalog` is given, unresolvable ids fail in strict mode and
    // are skipped and counted in lenient mode.
    static KnowledgeGraph ingest(const std::filesystem::path& path, IngestMode mode = IngestMode::lenient,
                                 const Catalog* catalog = nullptr, IngestReport* report = nullptr);

    static KnowledgeGraph from_triplets(std::span<const Triplet> triplets);

    // Returns false when the triplet was already stored.
    bool insert(const Triplet& t);

    std::size_t degree(std::string_view entity) const;

    // Sorted by property id, then object.
    std::vector<Triplet> triplets_of(std::string_view entity) const;

    // Outgoing edges, or nullptr when the entity is never a subject.
    const std::set<Edge>* edges_of(std::string_view entity) const;

    bool contains(const Triplet& t) const;

    // Idempotent; triplets not present are counted as absent.
    RemovalResult remove_holdout(std::span<const Triplet> triplets);

    std::vector<DegreeBin> degree_histogram(const HistogramBinning& binning = {}) const;

    // Distinct objects reachable through `property`.
    std::size_t answer_space(std::string_view property) const;
    std::map<std::string, std::size_t> answer_spaces() const;

    std::size_t triplet_count() const { return count_; }
    std::size_t subject_count() const { return adjacency_.size(); }
    std::vector<std::string> subjects() const;  // sorted

    // Visits every triplet in (subject, property, object) order.
    void for_each(const std::function<void(const Triplet&)>& fn) const;

    bool operator==(const KnowledgeGraph& other) const { return adjacency_ == other.adjacency_; }

private:
    std::map<std::string, std::set<Edge>, std::less<>> adjacency_;
    std::size_t count_ = 0;
};

// Bin bounds a degree falls into.
DegreeBin bin_for_degree(std::uint64_t degree, const HistogramBinning& binning);

}  // namespace longtail
