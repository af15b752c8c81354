#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "longtail/kg.hpp"
#include "longtail/sampler.hpp"

namespace longtail {

enum class VerdictKind { keep, reject };
enum class VerdictSource { heuristic, human };

std::string_view to_string(VerdictKind v);
std::string_view to_string(VerdictSource s);
VerdictKind parse_verdict_kind(std::string_view s);
VerdictSource parse_verdict_source(std::string_view s);

struct Verdict {
    VerdictKind kind = VerdictKind::keep;
    std::string reason;  // required for reject
    VerdictSource source = VerdictSource::heuristic;

    bool operator==(const Verdict&) const = default;
};

struct HeuristicConfig {
    // Fraction of literal objects that must look like URLs or media files.
    double url_media_threshold = 0.5;
    // Fraction of samples whose object appears inside the subject label.
    double answer_leak_threshold = 0.5;
    std::vector<std::string> label_keywords{"url", "image", "logo", "website", "blog"};
    std::vector<std::string> media_extensions{".jpg", ".jpeg", ".png", ".gif",  ".svg", ".tif",  ".tiff",
                                              ".webp", ".webm", ".ogg", ".oga", ".ogv",  ".mp3", ".mp4",
                                              ".wav", ".flac", ".pdf", ".djvu", ".stl",  ".ico"};
    // Property labels too vague to ask about. Compared lowercase.
    std::vector<std::string> blocklist{"instance of", "subclass of", "part of"};
};

// One label per line; blank lines and '#' comments skipped.
std::vector<std::string> load_blocklist(const std::filesystem::path& path);

inline constexpr std::string_view kRuleUrlMedia = "url_media";
inline constexpr std::string_view kRuleAnswerLeak = "answer_leak";
inline constexpr std::string_view kRuleBlocklist = "structural_blocklist";

struct ScreenResult {
    Verdict suggestion;
    std::vector<std::string> fired_rules;
};

// Suggests reject when any rule fires, keep otherwise. `sample` must only hold
// triplets of `property`; subject labels are looked up in `catalog`.
ScreenResult heuristic_screen(const Property& property, std::span<const Triplet> sample, const Catalog& catalog,
                              const HeuristicConfig& config = {});

// Seeded subset of up to `count` triplets used to screen one property.
std::vector<Triplet> draw_screen_sample(std::span<const Triplet> triplets, std::size_t count, std::uint64_t seed,
                                        std::string_view property_id);

struct LedgerEntry {
    std::string property_id;
    Verdict verdict;
    std::string ts;
};

Json ledger_entry_to_json(const LedgerEntry& e);
LedgerEntry ledger_entry_from_json(const Json& j, const std::string& where);

// Append-only log of keep/reject decisions. The effective verdict of a
// property is its last human entry; heuristic entries only count when no
// human entry exists and heuristics are being auto-applied.
class FilterLedger {
public:
    // A missing file yields an empty ledger.
    static FilterLedger load(const std::filesystem::path& path);

    void append(LedgerEntry entry);

    const std::vector<LedgerEntry>& entries() const { return entries_; }

    std::optional<Verdict> effective(std::string_view property_id, bool apply_heuristics) const;
    std::optional<Verdict> last_human(std::string_view property_id) const;
    std::optional<Verdict> last_heuristic(std::string_view property_id) const;

    std::map<std::string, Verdict> effective_map(bool apply_heuristics) const;

private:
    std::vector<LedgerEntry> entries_;
    std::map<std::string, Verdict, std::less<>> last_human_;
    std::map<std::string, Verdict, std::less<>> last_heuristic_;
};

// Appends after checking the property exists and a reject carries a reason.
void record_decision(FilterLedger& ledger, const Catalog& catalog, std::string_view property_id, Verdict verdict,
                     std::string ts = utc_timestamp());

// Single writer for a ledger file: each decision is appended and flushed
// before it becomes visible in the in-memory copy.
class LedgerWriter {
public:
    explicit LedgerWriter(std::filesystem::path path);

    void record(const Catalog& catalog, std::string_view property_id, Verdict verdict);
    FilterLedger snapshot() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
    FilterLedger ledger_;
};

struct FilterResult {
    std::vector<Candidate> kept;
    std::vector<Candidate> rejected;
    std::set<std::string> untriaged;  // properties kept only because nobody decided
};

FilterResult apply_filter(std::span<const Candidate> candidates, const FilterLedger& ledger, bool apply_heuristics);

}  // namespace longtail
