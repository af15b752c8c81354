#include "longtail/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "longtail/error.hpp"
#include "longtail/text.hpp"

namespace longtail {

std::string_view to_string(CombineRule r) { return r == CombineRule::similarity_only ? "similarity_only" : "convex"; }

CombineRule parse_combine_rule(std::string_view s) {
    if (s == "similarity_only") return CombineRule::similarity_only;
    if (s == "convex") return CombineRule::convex;
    fail(ErrorKind::usage, "invalid combine rule \"" + std::string(s) + "\"");
}

void validate(const RerankConfig& cfg) {
    if (cfg.max_depth < 1) fail(ErrorKind::usage, "rerank max_depth must be >= 1");
    if (cfg.max_paths < 1) fail(ErrorKind::usage, "rerank max_paths must be >= 1");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail(ErrorKind::usage, "rerank alpha must lie in [0, 1]");
}

namespace {

bool on_path(const KgPath& p, std::string_view entity) {
    if (p.subject == entity) return true;
    return std::any_of(p.hops.begin(), p.hops.end(), [&](const Triplet& t) {
        return t.object_kind == ObjectKind::entity && t.object == entity;
    });
}

}  // namespace

std::vector<KgPath> find_paths(const KnowledgeGraph& kg, std::string_view subject, const RerankConfig& cfg) {
    validate(cfg);
    std::vector<KgPath> out;
    if (!kg.edges_of(subject)) return out;

    // Frontier paths of the previous level, in lexicographic order; children
    // are appended in sorted edge order so each level stays sorted.
    std::vector<KgPath> frontier{KgPath{std::string(subject), {}}};
    for (std::size_t depth = 1; depth <= cfg.max_depth && !frontier.empty(); ++depth) {
        std::vector<KgPath> next;
        for (const auto& parent : frontier) {
            const std::string& tail = parent.hops.empty() ? parent.subject : parent.hops.back().object;
            const auto* edges = kg.edges_of(tail);
            if (!edges) continue;
            for (const auto& e : *edges) {
                if (e.object_kind == ObjectKind::entity && on_path(parent, e.object)) continue;
                KgPath child = parent;
                child.hops.push_back(Triplet{tail, e.property, e.object, e.object_kind});
                out.push_back(child);
                if (out.size() >= cfg.max_paths) return out;
                if (e.object_kind == ObjectKind::entity) next.push_back(std::move(child));
            }
        }
        frontier = std::move(next);
    }
    return out;
}

std::optional<std::string> verbalize(const KgPath& path, const Catalog& catalog) {
    const auto* s = catalog.entity(path.subject);
    if (!s) return std::nullopt;
    std::string out = to_lower(s->label);
    for (const auto& hop : path.hops) {
        const auto* p = catalog.property(hop.property);
        auto o = catalog.object_surface(hop);
        if (!p || !o) return std::nullopt;
        out += " " + to_lower(p->label) + " " + to_lower(*o);
    }
    return out;
}

RerankResult rerank(const RankedList& ranked, std::span<const std::string> verbalizations,
                    EmbeddingProvider& provider, const Corpus& corpus, const RerankConfig& cfg) {
    validate(cfg);
    RerankResult r;
    r.ranked.qid = ranked.qid;
    r.ranked.retriever = ranked.retriever + "+kg";
    r.paths_used = verbalizations.size();

    const auto n = ranked.entries.size();
    std::vector<double> kg(n, 0.0);

    if (verbalizations.empty() || n == 0) {
        r.no_paths = verbalizations.empty();
        r.ranked.entries = ranked.entries;
        for (const auto& e : ranked.entries) r.entries.push_back(RerankedEntry{e.passage_id, e.score, 0.0, e.score});
        return r;
    }

    std::vector<std::string> texts(verbalizations.begin(), verbalizations.end());
    for (const auto& e : ranked.entries) {
        const auto* p = corpus.find(e.passage_id);
        if (!p) fail(ErrorKind::data, "ranked passage " + e.passage_id + " is not in the corpus");
        texts.push_back(p->text);
    }
    auto vecs = provider.embed(texts);
    if (vecs.size() != texts.size()) fail(ErrorKind::backend, "embedding provider returned wrong row count");

    // Unit-normalize once; the max over paths is then a plain dot product.
    std::vector<std::vector<double>> unit(vecs.size());
    for (std::size_t r = 0; r < vecs.size(); ++r) {
        if (vecs[r].size() != vecs[0].size()) fail(ErrorKind::backend, "embedding rows differ in dimension");
        double norm = 0;
        for (float x : vecs[r]) norm += static_cast<double>(x) * x;
        norm = std::sqrt(norm);
        unit[r].resize(vecs[r].size());
        for (std::size_t d = 0; d < vecs[r].size(); ++d) unit[r][d] = norm > 0 ? vecs[r][d] / norm : 0.0;
    }
    const auto nv = verbalizations.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = unit[nv + i];
        double best = -1.0;
        for (std::size_t v = 0; v < nv; ++v) {
            best = std::max(best, std::inner_product(p.begin(), p.end(), unit[v].begin(), 0.0));
        }
        kg[i] = best;
    }

    std::vector<double> final_score(n);
    if (cfg.combine == CombineRule::similarity_only) {
        final_score = kg;
    } else {
        auto [lo_it, hi_it] = std::minmax_element(ranked.entries.begin(), ranked.entries.end(),
                                                  [](const auto& a, const auto& b) { return a.score < b.score; });
        const double lo = lo_it->score;
        const double span = hi_it->score - lo;
        for (std::size_t i = 0; i < n; ++i) {
            const double norm = span > 0 ? (ranked.entries[i].score - lo) / span : 0.0;
            final_score[i] = cfg.alpha * norm + (1.0 - cfg.alpha) * kg[i];
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return final_score[a] > final_score[b]; });

    for (auto i : order) {
        const auto& e = ranked.entries[i];
        r.ranked.entries.push_back(ScoredPassage{e.passage_id, final_score[i]});
        r.entries.push_back(RerankedEntry{e.passage_id, e.score, kg[i], final_score[i]});
    }
    return r;
}

Json rerank_result_to_json(const RerankResult& r) {
    Json ranking = Json::array();
    for (const auto& e : r.entries) {
        ranking.push_back(Json{{"passage", e.passage_id},
                               {"orig_score", e.orig_score},
                               {"kg_score", e.kg_score},
                               {"score", e.final_score}});
    }
    return Json{{"qid", r.ranked.qid},
                {"retriever", r.ranked.retriever},
                {"ranking", ranking},
                {"paths_used", r.paths_used},
                {"no_paths", r.no_paths}};
}

std::vector<RecallDelta> rerank_report(std::span<const QAItem> items, const std::map<std::string, RankedList>& before,
                                       const std::map<std::string, RankedList>& after, const Corpus& corpus,
                                       std::span<const std::size_t> ks) {
    auto rb = recall_at_k(items, before, corpus, ks);
    auto ra = recall_at_k(items, after, corpus, ks);
    std::vector<RecallDelta> out;
    for (const auto& [k, b] : rb) out.push_back(RecallDelta{k, b, ra[k], ra[k] - b});
    return out;
}

}  // namespace longtail
