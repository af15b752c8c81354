#include "longtail/property_filter.hpp"

#include <algorithm>
#include <fstream>

#include "longtail/error.hpp"
#include "longtail/random.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

std::string_view to_string(VerdictKind v) { return v == VerdictKind::keep ? "keep" : "reject"; }
std::string_view to_string(VerdictSource s) { return s == VerdictSource::human ? "human" : "heuristic"; }

VerdictKind parse_verdict_kind(std::string_view s) {
    if (s == "keep") return VerdictKind::keep;
    if (s == "reject") return VerdictKind::reject;
    fail(ErrorKind::data, "invalid verdict \"" + std::string(s) + "\"");
}

VerdictSource parse_verdict_source(std::string_view s) {
    if (s == "human") return VerdictSource::human;
    if (s == "heuristic") return VerdictSource::heuristic;
    fail(ErrorKind::data, "invalid verdict source \"" + std::string(s) + "\"");
}

std::vector<std::string> load_blocklist(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::usage, "cannot open blocklist " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.push_back(to_lower(t));
    }
    return out;
}

namespace {

// Both arguments are normalized text padded with one space on each side, so
// only whole-word runs match.
bool contains_words(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

bool looks_like_url(std::string_view lower) {
    return lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("ftp://") ||
           lower.starts_with("www.");
}

bool has_media_extension(std::string_view lower, const std::vector<std::string>& exts) {
    return std::any_of(exts.begin(), exts.end(), [&](const std::string& ext) { return lower.ends_with(ext); });
}

}  // namespace

ScreenResult heuristic_screen(const Property& property, std::span<const Triplet> sample, const Catalog& catalog,
                              const HeuristicConfig& config) {
    for (const auto& t : sample) {
        if (t.property != property.id) {
            fail(ErrorKind::usage, "screen sample for " + property.id + " contains a " + t.property + " triplet");
        }
    }

    ScreenResult r;
    const auto label = to_lower(trim(property.label));

    // URL / media rule
    bool url_media = false;
    for (const auto& tok : tokenize(label)) {
        if (std::find(config.label_keywords.begin(), config.label_keywords.end(), tok) != config.label_keywords.end()) {
            url_media = true;
        }
    }
    std::size_t literals = 0;
    std::size_t url_like = 0;
    for (const auto& t : sample) {
        if (t.object_kind != ObjectKind::literal) continue;
        ++literals;
        auto obj = to_lower(trim(t.object));
        if (looks_like_url(obj) || has_media_extension(obj, config.media_extensions)) ++url_like;
    }
    if (literals > 0 && static_cast<double>(url_like) >= config.url_media_threshold * static_cast<double>(literals)) {
        url_media = true;
    }
    if (url_media) r.fired_rules.emplace_back(kRuleUrlMedia);

    // Answer-leak rule
    if (!sample.empty()) {
        std::size_t leaks = 0;
        for (const auto& t : sample) {
            const auto* subject = catalog.entity(t.subject);
            auto object = catalog.object_surface(t);
            if (!subject || !object) continue;
            auto obj_norm = normalize(*object);
            if (!obj_norm.empty() && contains_words(" " + normalize(subject->label) + " ", " " + obj_norm + " ")) ++leaks;
        }
        if (static_cast<double>(leaks) >= config.answer_leak_threshold * static_cast<double>(sample.size())) {
            r.fired_rules.emplace_back(kRuleAnswerLeak);
        }
    }

    // Structural blocklist
    if (std::find(config.blocklist.begin(), config.blocklist.end(), label) != config.blocklist.end()) {
        r.fired_rules.emplace_back(kRuleBlocklist);
    }

    r.suggestion.source = VerdictSource::heuristic;
    if (r.fired_rules.empty()) {
        r.suggestion.kind = VerdictKind::keep;
        r.suggestion.reason = "no heuristic rule fired";
    } else {
        r.suggestion.kind = VerdictKind::reject;
        std::string reason;
        for (const auto& rule : r.fired_rules) reason += (reason.empty() ? "" : ",") + rule;
        r.suggestion.reason = reason;
    }
    return r;
}

std::vector<Triplet> draw_screen_sample(std::span<const Triplet> triplets, std::size_t count, std::uint64_t seed,
                                        std::string_view property_id) {
    SeededRng rng(derive_seed(seed, property_id));
    auto picks = rng.sample_indices(triplets.size(), count);
    std::sort(picks.begin(), picks.end());
    std::vector<Triplet> out;
    for (auto i : picks) out.push_back(triplets[i]);
    return out;
}

Json ledger_entry_to_json(const LedgerEntry& e) {
    return Json{{"property_id", e.property_id},
                {"verdict", std::string(to_string(e.verdict.kind))},
                {"reason", e.verdict.reason},
                {"source", std::string(to_string(e.verdict.source))},
                {"ts", e.ts}};
}

LedgerEntry ledger_entry_from_json(const Json& j, const std::string& where) {
    LedgerEntry e;
    e.property_id = require_string(j, "property_id", where);
    e.verdict.kind = parse_verdict_kind(require_string(j, "verdict", where));
    e.verdict.reason = j.value("reason", std::string{});
    e.verdict.source = parse_verdict_source(require_string(j, "source", where));
    e.ts = j.value("ts", std::string{});
    return e;
}

FilterLedger FilterLedger::load(const fs::path& path) {
    FilterLedger ledger;
    if (!fs::exists(path)) return ledger;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        ledger.append(ledger_entry_from_json(j, path.string() + ":" + std::to_string(line)));
    });
    return ledger;
}

void FilterLedger::append(LedgerEntry entry) {
    if (entry.property_id.empty()) fail(ErrorKind::data, "ledger entry without property id");
    if (entry.verdict.kind == VerdictKind::reject && trim(entry.verdict.reason).empty()) {
        fail(ErrorKind::data, "reject verdict for " + entry.property_id + " has no reason");
    }
    auto& target = entry.verdict.source == VerdictSource::human ? last_human_ : last_heuristic_;
    target.insert_or_assign(entry.property_id, entry.verdict);
    entries_.push_back(std::move(entry));
}

std::optional<Verdict> FilterLedger::last_human(std::string_view property_id) const {
    auto it = last_human_.find(property_id);
    return it == last_human_.end() ? std::nullopt : std::optional<Verdict>(it->second);
}

std::optional<Verdict> FilterLedger::last_heuristic(std::string_view property_id) const {
    auto it = last_heuristic_.find(property_id);
    return it == last_heuristic_.end() ? std::nullopt : std::optional<Verdict>(it->second);
}

std::optional<Verdict> FilterLedger::effective(std::string_view property_id, bool apply_heuristics) const {
    if (auto h = last_human(property_id)) return h;
    if (apply_heuristics) return last_heuristic(property_id);
    return std::nullopt;
}

std::map<std::string, Verdict> FilterLedger::effective_map(bool apply_heuristics) const {
    std::map<std::string, Verdict> out;
    if (apply_heuristics) {
        for (const auto& [p, v] : last_heuristic_) out.insert_or_assign(p, v);
    }
    for (const auto& [p, v] : last_human_) out.insert_or_assign(p, v);
    return out;
}

void record_decision(FilterLedger& ledger, const Catalog& catalog, std::string_view property_id, Verdict verdict,
                     std::string ts) {
    if (!catalog.property(property_id)) fail(ErrorKind::not_found, "unknown property " + std::string(property_id));
    ledger.append(LedgerEntry{std::string(property_id), std::move(verdict), std::move(ts)});
}

LedgerWriter::LedgerWriter(fs::path path) : path_(std::move(path)), ledger_(FilterLedger::load(path_)) {}

void LedgerWriter::record(const Catalog& catalog, std::string_view property_id, Verdict verdict) {
    std::lock_guard lock(mu_);
    // Validate against a scratch copy so a rejected decision never reaches disk.
    FilterLedger scratch;
    record_decision(scratch, catalog, property_id, verdict);
    const auto& entry = scratch.entries().back();

    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) fail(ErrorKind::data, "cannot append to ledger " + path_.string());
    out << dump_line(ledger_entry_to_json(entry)) << '\n';
    out.flush();
    if (!out) fail(ErrorKind::data, "ledger append failed: " + path_.string());
    ledger_.append(entry);
}

FilterLedger LedgerWriter::snapshot() const {
    std::lock_guard lock(mu_);
    return ledger_;
}

FilterResult apply_filter(std::span<const Candidate> candidates, const FilterLedger& ledger, bool apply_heuristics) {
    FilterResult r;
    for (const auto& c : candidates) {
        auto v = ledger.effective(c.triplet.property, apply_heuristics);
        if (!v) r.untriaged.insert(c.triplet.property);
        if (v && v->kind == VerdictKind::reject) {
            r.rejected.push_back(c);
        } else {
            r.kept.push_back(c);
        }
    }
    return r;
}

}  // namespace longtail
