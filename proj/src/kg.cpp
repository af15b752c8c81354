#include "longtail/kg.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "longtail/error.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

std::string_view to_string(ObjectKind kind) { return kind == ObjectKind::entity ? "entity" : "literal"; }

ObjectKind parse_object_kind(std::string_view s) {
    if (s == "entity") return ObjectKind::entity;
    if (s == "literal") return ObjectKind::literal;
    fail(ErrorKind::data, "invalid object_kind \"" + std::string(s) + "\"");
}

Json triplet_to_json(const Triplet& t) {
    return Json{{"subject", t.subject},
                {"property", t.property},
                {"object", t.object},
                {"object_kind", std::string(to_string(t.object_kind))}};
}

Triplet triplet_from_json(const Json& j, const std::string& where) {
    Triplet t;
    t.subject = require_string(j, "subject", where);
    t.property = require_string(j, "property", where);
    t.object = require_string(j, "object", where);
    t.object_kind = parse_object_kind(require_string(j, "object_kind", where));
    return t;
}

// ---------------------------------------------------------------------------
// Catalog

void Catalog::add_entity(Entity e) {
    if (e.id.empty()) fail(ErrorKind::data, "entity with empty id");
    if (e.label.empty()) fail(ErrorKind::data, "entity " + e.id + " has an empty label");
    std::sort(e.aliases.begin(), e.aliases.end());
    e.aliases.erase(std::unique(e.aliases.begin(), e.aliases.end()), e.aliases.end());
    std::erase_if(e.aliases, [&](const std::string& a) { return a.empty() || a == e.label; });
    auto id = e.id;
    entities_.insert_or_assign(std::move(id), std::move(e));
}

void Catalog::add_property(Property p) {
    if (p.id.empty()) fail(ErrorKind::data, "property with empty id");
    if (p.label.empty()) fail(ErrorKind::data, "property " + p.id + " has an empty label");
    auto id = p.id;
    properties_.insert_or_assign(std::move(id), std::move(p));
}

void Catalog::load_entities(const fs::path& path) {
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        auto where = path.string() + ":" + std::to_string(line);
        Entity e;
        e.id = require_string(j, "id", where);
        e.label = require_string(j, "label", where);
        if (auto it = j.find("aliases"); it != j.end() && !it->is_null()) {
            if (!it->is_array()) fail(ErrorKind::data, where + ": \"aliases\" must be an array");
            for (const auto& a : *it) {
                if (!a.is_string()) fail(ErrorKind::data, where + ": alias must be a string");
                e.aliases.push_back(a.get<std::string>());
            }
        }
        add_entity(std::move(e));
    });
}

void Catalog::load_properties(const fs::path& path) {
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        auto where = path.string() + ":" + std::to_string(line);
        add_property(Property{require_string(j, "id", where), require_string(j, "label", where)});
    });
}

const Entity* Catalog::entity(std::string_view id) const {
    auto it = entities_.find(std::string(id));
    return it == entities_.end() ? nullptr : &it->second;
}

const Property* Catalog::property(std::string_view id) const {
    auto it = properties_.find(std::string(id));
    return it == properties_.end() ? nullptr : &it->second;
}

std::optional<std::string> Catalog::object_surface(const Triplet& t) const {
    if (t.object_kind == ObjectKind::literal) return t.object;
    if (const auto* e = entity(t.object)) return e->label;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// KnowledgeGraph

namespace {

bool valid_id(std::string_view s) { return !s.empty() && s.find_first_of("\t\n\r") == std::string_view::npos; }

}  // namespace

KnowledgeGraph KnowledgeGraph::ingest(const fs::path& path, IngestMode mode, const Catalog* catalog,
                                      IngestReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open triplets file " + path.string());

    KnowledgeGraph g;
    IngestReport rep;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto where = path.string() + ":" + std::to_string(lineno);

        auto fields = split(line, '\t');
        if (fields.size() != 4) {
            fail(ErrorKind::data, where + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
        }
        if (!valid_id(fields[0]) || !valid_id(fields[1]) || fields[2].empty()) {
            fail(ErrorKind::data, where + ": empty subject, property or object");
        }
        Triplet t{fields[0], fields[1], fields[2], ObjectKind::entity};
        try {
            t.object_kind = parse_object_kind(fields[3]);
        } catch (const Error& e) {
            fail(ErrorKind::data, where + ": " + e.what());
        }
        ++rep.rows;

        if (catalog) {
            std::string missing;
            if (!catalog->entity(t.subject)) missing = t.subject;
            else if (!catalog->property(t.property)) missing = t.property;
            else if (t.object_kind == ObjectKind::entity && !catalog->entity(t.object)) missing = t.object;
            if (!missing.empty()) {
                if (mode == IngestMode::strict) fail(ErrorKind::data, where + ": unresolvable reference " + missing);
                ++rep.skipped_unresolved;
                continue;
            }
        }
        if (!g.insert(t)) ++rep.duplicates;
    }
    rep.stored = g.triplet_count();
    if (report) *report = rep;
    return g;
}

KnowledgeGraph KnowledgeGraph::from_triplets(std::span<const Triplet> triplets) {
    KnowledgeGraph g;
    for (const auto& t : triplets) g.insert(t);
    return g;
}

bool KnowledgeGraph::insert(const Triplet& t) {
    auto [it, inserted] = adjacency_[t.subject].insert(Edge{t.property, t.object, t.object_kind});
    if (inserted) ++count_;
    return inserted;
}

std::size_t KnowledgeGraph::degree(std::string_view entity) const {
    auto it = adjacency_.find(entity);
    return it == adjacency_.end() ? 0 : it->second.size();
}

std::vector<Triplet> KnowledgeGraph::triplets_of(std::string_view entity) const {
    std::vector<Triplet> out;
    auto it = adjacency_.find(entity);
    if (it == adjacency_.end()) return out;
    out.reserve(it->second.size());
    for (const auto& e : it->second) out.push_back(Triplet{it->first, e.property, e.object, e.object_kind});
    return out;
}

const std::set<Edge>* KnowledgeGraph::edges_of(std::string_view entity) const {
    auto it = adjacency_.find(entity);
    return it == adjacency_.end() ? nullptr : &it->second;
}

bool KnowledgeGraph::contains(const Triplet& t) const {
    const auto* edges = edges_of(t.subject);
    return edges && edges->contains(Edge{t.property, t.object, t.object_kind});
}

RemovalResult KnowledgeGraph::remove_holdout(std::span<const Triplet> triplets) {
    RemovalResult r;
    for (const auto& t : triplets) {
        auto it = adjacency_.find(t.subject);
        if (it == adjacency_.end() || it->second.erase(Edge{t.property, t.object, t.object_kind}) == 0) {
            ++r.absent;
            continue;
        }
        ++r.removed;
        --count_;
        if (it->second.empty()) adjacency_.erase(it);
    }
    return r;
}

DegreeBin bin_for_degree(std::uint64_t degree, const HistogramBinning& binning) {
    if (degree <= binning.exact_up_to) return DegreeBin{degree, degree, 0};
    std::uint64_t hi = 1;
    while (hi < degree) hi <<= 1;
    return DegreeBin{std::max(binning.exact_up_to + 1, hi / 2 + 1), hi, 0};
}

std::vector<DegreeBin> KnowledgeGraph::degree_histogram(const HistogramBinning& binning) const {
    std::map<std::uint64_t, DegreeBin> bins;
    for (const auto& [subject, edges] : adjacency_) {
        auto b = bin_for_degree(edges.size(), binning);
        auto [it, _] = bins.try_emplace(b.lo, b);
        ++it->second.count;
    }
    std::vector<DegreeBin> out;
    out.reserve(bins.size());
    for (auto& [lo, b] : bins) out.push_back(b);
    return out;
}

std::size_t KnowledgeGraph::answer_space(std::string_view property) const {
    std::set<std::pair<ObjectKind, std::string_view>> objects;
    for (const auto& [subject, edges] : adjacency_) {
        for (const auto& e : edges) {
            if (e.property == property) objects.emplace(e.object_kind, e.object);
        }
    }
    return objects.size();
}

std::map<std::string, std::size_t> KnowledgeGraph::answer_spaces() const {
    std::map<std::string, std::set<std::pair<ObjectKind, std::string_view>>> objects;
    for (const auto& [subject, edges] : adjacency_) {
        for (const auto& e : edges) objects[e.property].emplace(e.object_kind, e.object);
    }
    std::map<std::string, std::size_t> out;
    for (const auto& [p, set] : objects) out.emplace(p, set.size());
    return out;
}

std::vector<std::string> KnowledgeGraph::subjects() const {
    std::vector<std::string> out;
    out.reserve(adjacency_.size());
    for (const auto& [s, _] : adjacency_) out.push_back(s);
    return out;
}

void KnowledgeGraph::for_each(const std::function<void(const Triplet&)>& fn) const {
    for (const auto& [subject, edges] : adjacency_) {
        for (const auto& e : edges) fn(Triplet{subject, e.property, e.object, e.object_kind});
    }
}

}  // namespace longtail
