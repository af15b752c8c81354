#include "longtail/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "longtail/error.hpp"
#include "longtail/jsonl.hpp"
#include "longtail/random.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

namespace {

enum class Role { person, country, place, conflict, klass, organization, side };

struct SynEntity {
    std::string id;
    std::string label;
    std::vector<std::string> aliases;
    Role role;
};

struct SynProperty {
    std::string id;
    std::string label;
    double weight;
    bool single;
    std::string phrase;  // used in passages
};

const std::vector<SynProperty> kProperties{
    {"P17", "country", 3, true, "is located in the country of"},
    {"P131", "located in the administrative territorial entity", 2, false, "lies within"},
    {"P607", "conflict", 2, false, "took part in"},
    {"P734", "family name", 2, true, "carries the family name"},
    {"P856", "official website", 1, true, "publishes its website at"},
    {"P154", "logo image", 1, true, "uses the logo file"},
    {"P31", "instance of", 2, true, "is an instance of"},
    {"P361", "part of", 1, false, "is part of"},
    {"P571", "inception", 1, true, "was founded in"},
    {"P569", "date of birth", 2, true, "was born in"},
    {"P1622", "driving side", 1, true, "drives on the"},
    {"P40", "child", 3, false, "is the parent of"},
    {"P26", "spouse", 1, false, "is married to"},
    {"P19", "place of birth", 2, true, "was born in the place"},
    {"P69", "educated at", 2, false, "studied at"},
    {"P108", "employer", 2, false, "worked for"},
    {"P106", "occupation", 3, false, "worked as"},
    {"P166", "award received", 2, false, "received the"},
    {"P27", "country of citizenship", 2, false, "is a citizen of"},
    {"P463", "member of", 2, false, "is a member of"},
    {"P1412", "languages spoken", 1, false, "speaks"},
    {"P800", "notable work", 2, false, "is known for"},
};

const std::vector<std::string> kOnsets{"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "st", "kh"};
const std::vector<std::string> kVowels{"a", "e", "i", "o", "u", "ai", "ei", "ou"};
const std::vector<std::string> kCodas{"", "", "n", "r", "l", "s", "th", "m"};
const std::vector<std::string> kClasses{"human", "city", "war", "company", "university", "river", "novel", "band"};
const std::vector<std::string> kOccupations{"painter", "sailor", "engineer", "poet", "farmer", "architect", "physician"};
const std::vector<std::string> kLanguages{"Velmic", "Oskari", "Tural", "Brennish", "Castane"};

std::string capitalize(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

class NameForge {
public:
    explicit NameForge(SeededRng& rng) : rng_(rng) {}

    std::string word(std::size_t syllables) {
        std::string w;
        for (std::size_t i = 0; i < syllables; ++i) {
            w += pick(kOnsets) + pick(kVowels);
        }
        return capitalize(w + pick(kCodas));
    }

    std::string unique(const std::function<std::string()>& make) {
        for (;;) {
            auto s = make();
            if (used_.insert(to_lower(s)).second) return s;
        }
    }

private:
    const std::string& pick(const std::vector<std::string>& v) { return v[rng_.below(v.size())]; }

    SeededRng& rng_;
    std::set<std::string> used_;
};

// Inverse-CDF draw from a truncated power law over 1..max.
std::size_t draw_degree(SeededRng& rng, const std::vector<double>& cdf) {
    const double u = rng.unit();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1)) + 1;
}

}  // namespace

SyntheticSummary write_synthetic(const fs::path& dir, const SyntheticOptions& o) {
    if (o.entities < 50) fail(ErrorKind::usage, "synthetic graph needs at least 50 entities");
    if (o.max_degree == 0 || o.zipf_exponent <= 0) fail(ErrorKind::usage, "bad degree distribution");
    fs::create_directories(dir);

    SeededRng rng(o.seed);
    NameForge forge(rng);
    std::vector<SynEntity> ents;
    std::map<Role, std::vector<std::size_t>> by_role;
    auto add = [&](std::string label, Role role, std::vector<std::string> aliases = {}) {
        by_role[role].push_back(ents.size());
        ents.push_back({"Q" + std::to_string(ents.size() + 1), std::move(label), std::move(aliases), role});
    };

    add("left", Role::side);
    add("right", Role::side);
    for (const auto& c : kClasses) add(c, Role::klass);
    for (const auto& c : kOccupations) add(c, Role::klass);
    for (const auto& l : kLanguages) add(l, Role::klass);
    const std::size_t countries = std::max<std::size_t>(8, o.entities / 40);
    for (std::size_t i = 0; i < countries; ++i) {
        auto name = forge.unique([&] { return forge.word(2) + "ia"; });
        add(name, Role::country, {"Republic of " + name});
    }
    const std::size_t conflicts = std::max<std::size_t>(4, o.entities / 80);
    for (std::size_t i = 0; i < conflicts; ++i) {
        auto name = forge.unique([&] { return forge.word(2); });
        std::string initial(1, name[0]);
        add("The " + name + " War", Role::conflict, {name + " War", initial + "W" + std::to_string(i + 1)});
    }
    const std::size_t orgs = std::max<std::size_t>(8, o.entities / 20);
    for (std::size_t i = 0; i < orgs; ++i) {
        add(forge.unique([&] { return forge.word(2) + " Institute"; }), Role::organization);
    }
    while (ents.size() < o.entities) {
        if (rng.below(5) == 0) {
            add(forge.unique([&] { return forge.word(2); }), Role::place);
        } else {
            add(forge.unique([&] { return forge.word(2) + " " + forge.word(2); }), Role::person);
        }
    }

    std::vector<double> cdf(o.max_degree);
    double total = 0;
    for (std::size_t k = 1; k <= o.max_degree; ++k) total += std::pow(static_cast<double>(k), -o.zipf_exponent);
    double acc = 0;
    for (std::size_t k = 1; k <= o.max_degree; ++k) {
        acc += std::pow(static_cast<double>(k), -o.zipf_exponent) / total;
        cdf[k - 1] = acc;
    }

    double weight_total = 0;
    for (const auto& p : kProperties) weight_total += p.weight;
    auto pick_property = [&]() -> const SynProperty& {
        double u = rng.unit() * weight_total;
        for (const auto& p : kProperties) {
            if (u < p.weight) return p;
            u -= p.weight;
        }
        return kProperties.back();
    };
    auto pick_role = [&](Role r) -> const SynEntity& {
        const auto& v = by_role[r];
        return ents[v[rng.below(v.size())]];
    };
    auto pick_any = [&]() -> const SynEntity& { return ents[rng.below(ents.size())]; };

    struct Fact {
        std::string property;
        std::string object;
        bool literal;
        std::string surface;
    };
    auto make_object = [&](const SynEntity& s, const SynProperty& p) -> Fact {
        auto ent = [&](const SynEntity& e) { return Fact{p.id, e.id, false, e.label}; };
        auto lit = [&](std::string v) { return Fact{p.id, v, true, v}; };
        const std::string slug = to_lower(s.label.substr(0, s.label.find(' ')));
        if (p.id == "P17" || p.id == "P27") return ent(pick_role(Role::country));
        if (p.id == "P131" || p.id == "P19") return ent(pick_role(Role::place));
        if (p.id == "P607") return ent(pick_role(Role::conflict));
        if (p.id == "P734") {
            auto sp = s.label.rfind(' ');
            return lit(sp == std::string::npos ? s.label : s.label.substr(sp + 1));
        }
        if (p.id == "P856") return lit("https://www." + slug + ".example.org");
        if (p.id == "P154") return lit(slug + "_logo.png");
        if (p.id == "P31") {
            switch (s.role) {
                case Role::person: return ent(ents[by_role[Role::klass][0]]);
                case Role::conflict: return ent(ents[by_role[Role::klass][2]]);
                case Role::organization: return ent(ents[by_role[Role::klass][4]]);
                default: return ent(ents[by_role[Role::klass][1]]);
            }
        }
        if (p.id == "P361") return ent(pick_role(Role::country));
        if (p.id == "P571" || p.id == "P569") return lit(std::to_string(1700 + rng.below(320)));
        if (p.id == "P1622") return ent(pick_role(Role::side));
        if (p.id == "P40" || p.id == "P26") return ent(pick_role(Role::person));
        if (p.id == "P69" || p.id == "P108" || p.id == "P463" || p.id == "P166") return ent(pick_role(Role::organization));
        if (p.id == "P106") return ent(ents[by_role[Role::klass][kClasses.size() + rng.below(kOccupations.size())]]);
        if (p.id == "P1412") {
            return ent(ents[by_role[Role::klass][kClasses.size() + kOccupations.size() + rng.below(kLanguages.size())]]);
        }
        return ent(pick_any());
    };

    std::string tsv = "# subject\tproperty\tobject\tobject_kind\n";
    std::string corpus;
    std::size_t triplets = 0;
    std::size_t passages = 0;
    auto emit_passage = [&](const std::string& title, const std::string& text) {
        char id[16];
        std::snprintf(id, sizeof id, "D%06zu", ++passages);
        corpus += dump_line(Json{{"id", id}, {"title", title}, {"text", text}}) + "\n";
    };

    for (const auto& s : ents) {
        const auto degree = draw_degree(rng, cdf);
        std::set<std::pair<std::string, std::string>> seen;
        std::set<std::string> singles;
        std::vector<Fact> facts;
        for (std::size_t attempt = 0; facts.size() < degree && attempt < degree * 20; ++attempt) {
            const auto& p = pick_property();
            if (p.single && singles.contains(p.id)) continue;
            auto f = make_object(s, p);
            if (!f.literal && f.object == s.id) continue;
            if (!seen.emplace(f.property, f.object).second) continue;
            if (p.single) singles.insert(p.id);
            facts.push_back(std::move(f));
        }
        std::vector<std::string> sentences;
        for (const auto& f : facts) {
            tsv += s.id + "\t" + f.property + "\t" + f.object + "\t" + (f.literal ? "literal" : "entity") + "\n";
            ++triplets;
            if (rng.unit() < o.fact_coverage) {
                const auto& p = *std::find_if(kProperties.begin(), kProperties.end(),
                                              [&](const auto& q) { return q.id == f.property; });
                sentences.push_back(s.label + " " + p.phrase + " " + f.surface + ".");
            }
        }
        for (std::size_t i = 0; i < sentences.size(); i += 4) {
            std::string text;
            for (std::size_t j = i; j < std::min(i + 4, sentences.size()); ++j) text += (text.empty() ? "" : " ") + sentences[j];
            emit_passage(s.label, text);
        }
    }
    for (std::size_t d = 0; d < o.distractors; ++d) {
        const auto& a = pick_any();
        const auto& b = pick_any();
        emit_passage(a.label, "Travellers often compare " + a.label + " with " + b.label +
                                  ", although the two have little in common.");
    }

    std::string entities;
    for (const auto& e : ents) {
        Json j{{"id", e.id}, {"label", e.label}};
        if (!e.aliases.empty()) j["aliases"] = e.aliases;
        entities += dump_line(j) + "\n";
    }
    std::string properties;
    for (const auto& p : kProperties) properties += dump_line(Json{{"id", p.id}, {"label", p.label}}) + "\n";

    const std::string config =
        "[paths]\n"
        "triplets = triplets.tsv\n"
        "entities = entities.jsonl\n"
        "properties = properties.jsonl\n"
        "corpus = corpus.jsonl\n"
        "output_dir = out\n"
        "\n"
        "[retrieval]\n"
        "k = 20\n"
        "recall_ks = 1,5,20\n"
        "\n"
        "[evaluate]\n"
        "miss_sample_size = 20\n";

    write_file_atomic(dir / "triplets.tsv", tsv);
    write_file_atomic(dir / "entities.jsonl", entities);
    write_file_atomic(dir / "properties.jsonl", properties);
    write_file_atomic(dir / "corpus.jsonl", corpus);
    write_file_atomic(dir / "config.ini", config);
    return {ents.size(), triplets, passages};
}

}  // namespace longtail
