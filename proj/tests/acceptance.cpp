// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
// Every check compares library output against an independent recount.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "longtail/answering.hpp"
#include "longtail/difficulty.hpp"
#include "longtail/kg.hpp"
#include "longtail/pipeline.hpp"
#include "longtail/property_filter.hpp"
#include "longtail/question_gen.hpp"
#include "longtail/rerank.hpp"
#include "longtail/retrieval.hpp"
#include "longtail/sampler.hpp"
#include "longtail/synthetic.hpp"
#include "longtail/text.hpp"
#include "support.hpp"

using namespace longtail;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

struct Criterion {
    std::string name;
    double budget_s;  // 0 means no time limit
    std::function<Outcome()> run;
};

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) out.push_back(cell);
    return out;
}

// 1. Bucket assignment against a recount straight from the TSV.
Outcome degree_buckets() {
    Outcome o;
    testing::TempDir dir;
    SyntheticOptions opts;
    opts.entities = 2000;
    write_synthetic(dir.path(), opts);
    auto kg = KnowledgeGraph::ingest(dir / "triplets.tsv");

    std::set<std::vector<std::string>> rows;
    std::ifstream in(dir / "triplets.tsv");
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        rows.insert(split_tab(line));
    }
    std::map<std::string, std::size_t> degree;
    for (const auto& r : rows) ++degree[r[0]];

    std::set<std::string> entities;
    std::ifstream ents(dir / "entities.jsonl");
    for (std::string line; std::getline(ents, line);) entities.insert(Json::parse(line).at("id").get<std::string>());
    o.require(entities.size() >= 1000, "fewer than 1000 entities");

    const auto buckets = default_buckets();
    std::map<std::string, std::set<std::string>> members;
    std::size_t in_bucket = 0;
    for (const auto& e : entities) {
        const auto d = degree.contains(e) ? degree[e] : 0;
        std::optional<std::string> expect;
        for (const auto& b : buckets) {
            if (d >= b.min_degree && d <= b.max_degree) expect = b.name;
        }
        if (expect) {
            members[*expect].insert(e);
            ++in_bucket;
        }
        o.require(kg.degree(e) == d, "degree mismatch for " + e);
        o.require(classify(kg, e, buckets) == expect, "bucket mismatch for " + e);
    }
    for (const auto& b : buckets) {
        auto got = bucket_members(kg, b);
        o.require(std::set<std::string>(got.begin(), got.end()) == members[b.name], "bucket_members differs for " + b.name);
        o.require(!members[b.name].empty(), "bucket " + b.name + " is empty");
    }
    o.detail = o.ok ? std::to_string(entities.size()) + " entities, " + std::to_string(in_bucket) + " bucketed" : o.detail;
    return o;
}

// 2. Histograms equal after matching, idempotent, on random instances.
Outcome difficulty_law() {
    Outcome o;
    std::mt19937_64 rng(2024);
    const int instances = 150;
    for (int i = 0; i < instances && o.ok; ++i) {
        auto a = testing::random_candidates(rng, 20 + rng() % 400, 3 + rng() % 20, "coarse");
        auto b = testing::random_candidates(rng, 20 + rng() % 400, 3 + rng() % 20, "fine");
        auto m = match_distributions(a, b, rng(), std::nullopt);
        const auto ha = property_histogram(a);
        const auto hb = property_histogram(b);
        PropertyHistogram expect;
        for (const auto& [p, n] : ha) {
            if (hb.contains(p)) expect[p] = std::min(n, hb.at(p));
        }
        o.require(property_histogram(m.first) == expect, "first histogram is not the min rule");
        o.require(property_histogram(m.second) == expect, "second histogram is not the min rule");
        auto again = match_distributions(m.first, m.second, rng(), std::nullopt);
        o.require(again.first == m.first && again.second == m.second, "matching is not idempotent");
    }
    if (o.ok) o.detail = std::to_string(instances) + " random instances";
    return o;
}

// 3. apply_filter is a partition and follows the replayed ledger.
Outcome filter_partition() {
    Outcome o;
    std::mt19937_64 rng(77);
    testing::TempDir dir;
    const int rounds = 100;
    for (int round = 0; round < rounds && o.ok; ++round) {
        const std::size_t props = 2 + rng() % 12;
        auto cands = testing::random_candidates(rng, 50 + rng() % 300, props, "fine");
        auto path = dir / ("ledger" + std::to_string(round) + ".jsonl");
        {
            std::ofstream out(path);
            for (int e = 0, n = static_cast<int>(rng() % 40); e < n; ++e) {
                auto kind = rng() % 2 ? VerdictKind::keep : VerdictKind::reject;
                auto src = rng() % 2 ? VerdictSource::human : VerdictSource::heuristic;
                LedgerEntry entry{"P" + std::to_string(rng() % props), {kind, kind == VerdictKind::reject ? "r" : "", src},
                                  "t"};
                out << dump_line(ledger_entry_to_json(entry)) << "\n";
            }
        }
        auto ledger = FilterLedger::load(path);
        std::map<std::string, Verdict> human;
        std::map<std::string, Verdict> heuristic;
        for (const auto& e : ledger.entries()) {
            (e.verdict.source == VerdictSource::human ? human : heuristic)[e.property_id] = e.verdict;
        }
        for (bool apply : {false, true}) {
            auto r = apply_filter(cands, ledger, apply);
            std::multiset<Candidate> in(cands.begin(), cands.end());
            std::multiset<Candidate> out(r.kept.begin(), r.kept.end());
            out.insert(r.rejected.begin(), r.rejected.end());
            o.require(in == out, "kept + rejected is not the input multiset");
            for (const auto& c : r.kept) {
                const auto& p = c.triplet.property;
                if (human.contains(p)) o.require(human[p].kind == VerdictKind::keep, "human reject ignored for " + p);
                else if (apply && heuristic.contains(p)) o.require(heuristic[p].kind == VerdictKind::keep, "heuristic reject ignored");
            }
            for (const auto& c : r.rejected) {
                const auto& p = c.triplet.property;
                if (human.contains(p)) o.require(human[p].kind == VerdictKind::reject, "human keep overridden for " + p);
                else o.require(apply && heuristic.contains(p) && heuristic[p].kind == VerdictKind::reject,
                               "rejected without a verdict");
            }
        }
    }
    if (o.ok) o.detail = std::to_string(rounds) + " ledgers replayed";
    return o;
}

struct DeterminismRun {
    testing::TempDir a;
    testing::TempDir b;
    std::size_t triplets = 0;
};

DeterminismRun& determinism_run() {
    static DeterminismRun run;
    return run;
}

// 4. Two runs from the same config give the same bytes.
Outcome generation_determinism() {
    Outcome o;
    auto& r = determinism_run();
    SyntheticOptions opts;
    opts.entities = 1000;
    for (const auto* d : {&r.a, &r.b}) {
        r.triplets = write_synthetic(d->path(), opts).triplets;
        Pipeline(load_config(*d / "config.ini")).run_all();
    }
    o.require(r.triplets >= 4000 && r.triplets <= 6000, "synthetic graph is not ~5k triplets");
    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(r.a / "out")) {
        const auto name = e.path().filename().string();
        if (!(name.starts_with("dataset_") || name.starts_with("predictions_") || name == "report.json")) continue;
        o.require(testing::slurp(e.path()) == testing::slurp(r.b / "out" / name), name + " differs");
        ++compared;
    }
    o.require(compared == 5, "expected 2 datasets, 2 prediction files and a report");
    if (o.ok) o.detail = std::to_string(r.triplets) + " triplets, " + std::to_string(compared) + " files identical";
    return o;
}

// 5. Echo-gold scores 1.0; aliases only add matches; the two worked cases.
Outcome evaluator_oracle() {
    Outcome o;
    auto report = Json::parse(testing::slurp(determinism_run().a / "out/report.json"));
    o.require(report["datasets"].size() == 2, "report lacks datasets");
    for (const auto& d : report["datasets"]) {
        o.require(d["evaluation"]["accuracy"] == 1.0, "echo-gold accuracy is not 1.0");
        o.require(d["evaluation"]["item_count"].get<std::size_t>() > 0, "empty evaluation");
    }

    const std::vector<std::string> ww{"WW2", "WWII"};
    o.require(exact_match("WWII", "World War II", ww), "WWII vs World War II with aliases");
    o.require(!exact_match("WWII", "World War II", {}), "WWII matched without aliases");
    o.require(!exact_match("Seoul", "South Korea", {}), "Seoul accepted for South Korea");

    std::mt19937_64 rng(5);
    const std::vector<std::string> words{"the", "war", "ii", "ww2", "seoul", "south", "korea", "new", "york", "city"};
    auto phrase = [&] {
        std::string s;
        for (int n = 1 + rng() % 3; n > 0; --n) s += words[rng() % words.size()] + " ";
        return s;
    };
    int flips = 0;
    const int trials = 5000;
    for (int t = 0; t < trials; ++t) {
        auto pred = phrase();
        auto label = phrase();
        std::vector<std::string> aliases;
        bool before = exact_match(pred, label, aliases);
        for (int extra = 0; extra < 3; ++extra) {
            aliases.push_back(phrase());
            bool after = exact_match(pred, label, aliases);
            if (before && !after) ++flips;
            before = after;
        }
        if (!exact_match(label, label, {})) ++flips;
    }
    o.require(flips == 0, std::to_string(flips) + " correct answers flipped by adding aliases");
    if (o.ok) o.detail = "accuracy 1.0 on both buckets, " + std::to_string(trials) + " alias trials";
    return o;
}

// 6. recall@k never decreases in k, for every retriever and corpus.
Outcome recall_monotonicity() {
    Outcome o;
    std::size_t checked = 0;
    auto check = [&](const Corpus& corpus, const std::vector<QAItem>& items, std::size_t max_k, std::size_t dim) {
        Bm25Index bm25(corpus);
        HashingEmbedder emb(dim);
        std::vector<std::string> ids;
        std::vector<std::string> texts;
        for (const auto& p : corpus.passages()) {
            ids.push_back(p.id);
            texts.push_back(p.text);
        }
        auto rows = emb.embed(texts);
        auto index = DenseIndex::from_rows(ids, dim, rows);
        DenseRetriever dense(index, emb);
        std::vector<std::size_t> ks;
        for (std::size_t k = 1; k <= max_k; ++k) ks.push_back(k);
        for (const Retriever* r : std::initializer_list<const Retriever*>{&bm25, &dense}) {
            std::map<std::string, RankedList> lists;
            for (const auto& q : items) lists[q.qid] = r->retrieve(q.qid, q.question, max_k);
            auto rec = recall_at_k(items, lists, corpus, ks);
            for (std::size_t i = 1; i < ks.size(); ++i) {
                o.require(rec[ks[i]] >= rec[ks[i - 1]], r->name() + " recall decreased at k=" + std::to_string(ks[i]));
            }
            ++checked;
        }
    };

    const auto& dir = determinism_run().a;
    auto corpus = Corpus::load(dir / "corpus.jsonl");
    check(corpus, read_dataset(dir / "out/dataset_fine.jsonl"), 50, 256);
    check(corpus, read_dataset(dir / "out/dataset_coarse.jsonl"), 50, 256);

    std::mt19937_64 rng(6);
    const std::vector<std::string> vocab{"red", "blue", "lake", "hill", "town", "river", "stone", "moss"};
    for (int round = 0; round < 20; ++round) {
        std::vector<Passage> ps;
        for (int d = 0; d < 25; ++d) {
            std::string t;
            for (int n = 0; n < 5; ++n) t += vocab[rng() % vocab.size()] + " ";
            ps.push_back({"D" + std::to_string(d), "", t});
        }
        std::vector<QAItem> items;
        for (int i = 0; i < 20; ++i) {
            QAItem q;
            q.qid = "q" + std::to_string(i);
            q.question = vocab[rng() % 8] + " " + vocab[rng() % 8];
            q.answer = vocab[rng() % 8] + " " + vocab[rng() % 8];
            items.push_back(q);
        }
        check(Corpus::from_passages(ps), items, 25, 64);
    }
    if (o.ok) o.detail = std::to_string(checked) + " retriever/corpus pairs";
    return o;
}

// 7. Two documents, scored by hand.
Outcome bm25_hand_check() {
    Outcome o;
    auto corpus = Corpus::from_passages({{"A", "", "apple banana apple"}, {"B", "", "banana cherry"}});
    Bm25Index idx(corpus);
    // N = 2, df(apple) = 1: idf = ln(1 + 1.5 / 1.5) = ln 2.
    // Doc A: tf = 2, |A| = 3, avgdl = 2.5, k1 = 1.2, b = 0.75:
    // tf * (k1 + 1) / (tf + k1 * (1 - b + b * 3 / 2.5)) = 4.4 / 3.38.
    // The query holds "apple" twice.
    const double expect = 2.0 * std::log(2.0) * 4.4 / 3.38;
    auto r = idx.retrieve("q", "apple apple", 2);
    o.require(r.entries.size() == 2 && r.entries[0].passage_id == "A", "A is not ranked first");
    const double rel = std::abs(r.entries[0].score - expect) / expect;
    o.require(rel <= 1e-9, "relative error " + std::to_string(rel));
    o.require(r.entries[1].score == 0.0, "B scored for a term it lacks");
    if (o.ok) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "score %.12f, relative error %.1e", r.entries[0].score, rel);
        o.detail = buf;
    }
    return o;
}

// 8. The passage equal to a path verbalization moves to rank 1.
Outcome rerank_oracle() {
    Outcome o;
    Catalog cat;
    cat.add_entity({"Q1", "Lovelyz", {}});
    cat.add_entity({"Q884", "South Korea", {}});
    cat.add_entity({"Q8684", "Seoul", {}});
    cat.add_property({"P17", "country"});
    cat.add_property({"P740", "location of formation"});
    std::vector<Triplet> ts{testing::ent("Q1", "P740", "Q8684"), testing::ent("Q1", "P17", "Q884"),
                            testing::ent("Q8684", "P17", "Q884")};
    auto kg = KnowledgeGraph::from_triplets(ts);
    std::vector<std::string> verbs;
    for (const auto& p : find_paths(kg, "Q1", {})) {
        if (auto v = verbalize(p, cat)) verbs.push_back(*v);
    }
    o.require(!verbs.empty(), "no verbalized paths");
    std::string target;
    for (const auto& v : verbs) {
        if (normalize(v).find("seoul") != std::string::npos && normalize(v).find("formation") != std::string::npos) target = v;
    }
    o.require(!target.empty(), "no path mentions the formation place");

    std::vector<Passage> ps;
    for (int i = 0; i < 9; ++i) ps.push_back({"D" + std::to_string(i), "", "girl group album tour number " + std::to_string(i)});
    ps.push_back({"D9", "", target});
    auto corpus = Corpus::from_passages(ps);
    RankedList before{"q", "bm25", {}};
    for (int i = 0; i < 10; ++i) before.entries.push_back({ps[i].id, 10.0 - i});

    HashingEmbedder emb;
    auto after = rerank(before, verbs, emb, corpus, {});
    QAItem item;
    item.qid = "q";
    item.question = "where was lovelyz formed?";
    item.answer = "Seoul";
    std::vector<QAItem> items{item};
    std::vector<std::size_t> ks{1, 10};
    auto d = rerank_report(items, {{"q", before}}, {{"q", after.ranked}}, corpus, ks);
    o.require(d.size() == 2, "missing deltas");
    if (d.size() == 2) {
        o.require(d[0].before == 0.0 && d[0].after == 1.0, "recall@1 did not go 0 -> 1");
        o.require(d[1].before == 1.0 && d[1].after == 1.0, "recall@10 changed");
    }
    if (o.ok) o.detail = "recall@1 0 -> 1, recall@10 1 -> 1, " + std::to_string(verbs.size()) + " paths";
    return o;
}

// 9. No path walks a held-out edge; paths equal a DFS over the remaining edges.
Outcome holdout_law() {
    Outcome o;
    std::mt19937_64 rng(9);
    std::size_t subjects_checked = 0;
    for (int round = 0; round < 40 && o.ok; ++round) {
        const std::size_t n = 10 + rng() % 40;
        auto ts = testing::random_triplets(rng, n, 50 + rng() % 450, 1 + rng() % 6, 0.15);
        auto kg = KnowledgeGraph::from_triplets(ts);
        std::set<Triplet> all(ts.begin(), ts.end());
        std::vector<Triplet> holdout;
        for (const auto& t : all) {
            if (rng() % 3 == 0) holdout.push_back(t);
        }
        kg.remove_holdout(holdout);
        std::set<Triplet> removed(holdout.begin(), holdout.end());
        std::set<Triplet> remaining;
        for (const auto& t : all) {
            if (!removed.contains(t)) remaining.insert(t);
        }

        RerankConfig cfg;
        cfg.max_depth = 3;
        cfg.max_paths = 1'000'000;
        for (std::size_t e = 0; e < n; ++e) {
            const auto subject = "E" + std::to_string(e);
            auto paths = find_paths(kg, subject, cfg);
            std::size_t expect = 0;
            std::vector<std::string> nodes{subject};
            std::function<void(const std::string&, std::size_t)> walk = [&](const std::string& at, std::size_t depth) {
                if (depth == cfg.max_depth) return;
                for (const auto& t : remaining) {
                    if (t.subject != at) continue;
                    const bool entity = t.object_kind == ObjectKind::entity;
                    if (entity && std::find(nodes.begin(), nodes.end(), t.object) != nodes.end()) continue;
                    ++expect;
                    if (entity) {
                        nodes.push_back(t.object);
                        walk(t.object, depth + 1);
                        nodes.pop_back();
                    }
                }
            };
            walk(subject, 0);
            for (const auto& p : paths) {
                for (const auto& h : p.hops) o.require(!removed.contains(h), "path uses a held-out edge from " + subject);
            }
            o.require(paths.size() == expect, "path count differs from DFS for " + subject);
            ++subjects_checked;
        }
    }
    if (o.ok) o.detail = std::to_string(subjects_checked) + " subjects enumerated";
    return o;
}

// 10. Annotated miss categories come back as exact ratios.
Outcome error_bookkeeping() {
    Outcome o;
    testing::TempDir dir;
    std::vector<QAItem> items;
    std::vector<Prediction> preds;
    for (int i = 0; i < 130; ++i) {
        QAItem q;
        q.qid = "q" + std::to_string(i);
        q.answer = "gold";
        q.bucket = "fine";
        items.push_back(q);
        Prediction p;
        p.qid = q.qid;
        p.prediction = i < 100 ? "something else" : "gold";
        preds.push_back(p);
    }
    const std::vector<std::pair<std::string, int>> split{{"incorrect", 45},   {"granularity", 19},     {"incorrect_question", 12},
                                                         {"exact_match", 9}, {"multiple_answers", 3}, {"other", 12}};
    {
        std::ofstream out(dir / "annotations.jsonl");
        int next = 0;
        for (const auto& [cat, n] : split) {
            for (int i = 0; i < n; ++i) out << dump_line(Json{{"qid", "q" + std::to_string(next++)}, {"category", cat}}) << "\n";
        }
    }
    auto report = score("fine", items, preds);
    import_error_annotations(report, read_annotations(dir / "annotations.jsonl"));
    auto j = Json::parse(accuracy_report_to_json(report).dump());
    o.require(j["annotated_misses"] == 100, "annotated count is not 100");
    for (const auto& [cat, n] : split) {
        const double got = j["error_distribution"][cat].get<double>();
        o.require(got == n / 100.0, cat + " ratio is " + std::to_string(got));
    }
    if (o.ok) o.detail = "45/19/12/9/3/12 of 100";
    return o;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"degree/bucket oracle", 5, degree_buckets},
        {"difficulty-control law", 30, difficulty_law},
        {"filter partition law", 0, filter_partition},
        {"generation determinism", 60, generation_determinism},
        {"evaluator oracle", 0, evaluator_oracle},
        {"recall monotonicity", 0, recall_monotonicity},
        {"bm25 hand-check", 0, bm25_hand_check},
        {"rerank oracle", 5, rerank_oracle},
        {"holdout law", 0, holdout_law},
        {"error-analysis bookkeeping", 0, error_bookkeeping},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.ok && c.budget_s > 0 && secs > c.budget_s) {
            o.ok = false;
            o.detail = "over the " + std::to_string(static_cast<int>(c.budget_s)) + " s budget";
        }
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", secs);
        std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.name << "  (" << timing << ")  " << o.detail << "\n";
        failed += !o.ok;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << "\n";
    return failed ? 1 : 0;
}
