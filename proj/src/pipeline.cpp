#include "longtail/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <thread>

#include "longtail/backend.hpp"
#include "longtail/difficulty.hpp"
#include "longtail/digest.hpp"
#include "longtail/error.hpp"
#include "longtail/random.hpp"
#include "longtail/triage.hpp"

namespace longtail {

namespace fs = std::filesystem;

Json manifest_to_json(const StageManifest& m) {
    return Json{{"stage", m.stage},     {"config_digest", m.config_digest}, {"seed", m.seed},
                {"inputs", m.inputs},   {"outputs", m.outputs},             {"counts", m.counts},
                {"timestamp", m.timestamp}};
}

StageManifest manifest_from_json(const Json& j) {
    StageManifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_digest = j.value("config_digest", std::string{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.outputs = j.value("outputs", std::map<std::string, std::string>{});
    m.counts = j.value("counts", Json::object());
    m.timestamp = j.value("timestamp", std::string{});
    return m;
}

namespace {

const std::vector<std::string> kChain{"build-index", "stats",    "sample",   "filter",   "match-difficulty",
                                      "generate",    "retrieve", "rerank",   "answer",   "evaluate",
                                      "report"};

std::string bucket_file(const std::string& prefix, const std::string& bucket, const std::string& ext = ".jsonl") {
    return prefix + "_" + bucket + ext;
}

// Outputs are buffered and only written once the whole stage succeeded.
class StageRun {
public:
    StageRun(const PipelineConfig& cfg, std::string stage, std::uint64_t seed,
             const std::map<std::string, std::string>* upstream = nullptr)
        : cfg_(cfg), upstream_(upstream) {
        manifest_.stage = std::move(stage);
        manifest_.config_digest = cfg.digest;
        manifest_.seed = seed;
    }

    void input(const std::string& label, const fs::path& path) {
        if (!path.empty() && fs::exists(path)) manifest_.inputs[label] = sha256_file(path);
    }

    void output(const std::string& rel, std::string content) { pending_.emplace_back(rel, std::move(content)); }

    Json& counts() { return manifest_.counts; }

    StageManifest commit(const fs::path& manifest_path) {
        std::vector<fs::path> temps;
        try {
            for (const auto& [rel, content] : pending_) {
                auto target = resolve(rel);
                if (target.has_parent_path()) fs::create_directories(target.parent_path());
                auto tmp = target;
                tmp += ".partial";
                temps.push_back(tmp);
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out << content;
                if (!out) fail(ErrorKind::data, "cannot write " + tmp.string());
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& t : temps) fs::remove(t, ec);
            throw;
        }
        for (std::size_t i = 0; i < pending_.size(); ++i) {
            fs::rename(temps[i], resolve(pending_[i].first));
            manifest_.outputs[pending_[i].first] = sha256_hex(pending_[i].second);
        }
        if (upstream_) manifest_.inputs.insert(upstream_->begin(), upstream_->end());
        manifest_.timestamp = utc_timestamp();
        write_file_atomic(manifest_path, manifest_to_json(manifest_).dump(2) + "\n");
        return manifest_;
    }

private:
    fs::path resolve(const std::string& rel) const {
        fs::path p(rel);
        return p.is_absolute() ? p : cfg_.output_dir / p;
    }

    const PipelineConfig& cfg_;
    const std::map<std::string, std::string>* upstream_;
    StageManifest manifest_;
    std::vector<std::pair<std::string, std::string>> pending_;
};

class Stages {
public:
    explicit Stages(const PipelineConfig& cfg) : cfg_(cfg) {}

    StageManifest run(const std::string& name) {
        verified_.clear();
        checked_.clear();
        if (name == "build-index") return build_index();
        if (name == "stats") return stats();
        if (name == "sample") return sample();
        if (name == "filter") return filter();
        if (name == "match-difficulty") return match_difficulty();
        if (name == "generate") return generate();
        if (name == "retrieve") return retrieve();
        if (name == "rerank") return rerank_stage();
        if (name == "answer") return answer();
        if (name == "evaluate") return evaluate();
        if (name == "report") return report();
        if (name == "embed-corpus") return embed_corpus();
        fail(ErrorKind::usage, "unknown stage \"" + name + "\"");
    }

    fs::path manifest_path(const std::string& stage) const { return cfg_.output_dir / "manifests" / (stage + ".json"); }

    std::vector<Candidate> load_candidates_for_triage() {
        verify_upstream("sample");
        std::vector<Candidate> all;
        for (const auto& b : cfg_.buckets) {
            auto part = read_candidates(out(bucket_file("candidates", b.name)));
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }

    Catalog catalog() const {
        Catalog c;
        if (!cfg_.entities.empty()) c.load_entities(cfg_.entities);
        if (!cfg_.properties.empty()) c.load_properties(cfg_.properties);
        return c;
    }

private:
    fs::path out(const std::string& rel) const { return cfg_.output_dir / rel; }

    bool has_run(const std::string& stage) const { return fs::exists(manifest_path(stage)); }

    // Digest of a manifest's output listing; downstream manifests record it
    // under "stage:<name>" so a re-run upstream stage invalidates them.
    static std::string outputs_digest(const StageManifest& m) { return sha256_hex(Json(m.outputs).dump()); }

    StageManifest verify_upstream(const std::string& stage) const {
        auto m = verify_chain(stage);
        verified_["stage:" + stage] = outputs_digest(m);
        return m;
    }

    StageManifest verify_chain(const std::string& stage) const {
        auto m = verify_outputs(stage);
        if (!checked_.insert(stage).second) return m;
        for (const auto& [label, digest] : m.inputs) {
            if (!label.starts_with("stage:")) continue;
            const auto up = label.substr(6);
            if (outputs_digest(verify_chain(up)) != digest) {
                fail(ErrorKind::data, "stage \"" + up + "\" produced new outputs after \"" + stage + "\" ran; re-run \"" +
                                          stage + "\"");
            }
        }
        return m;
    }

    StageManifest verify_outputs(const std::string& stage) const {
        auto path = manifest_path(stage);
        if (!fs::exists(path)) {
            fail(ErrorKind::data, "stage \"" + stage + "\" has not run (no manifest at " + path.string() +
                                      "); run it first");
        }
        auto m = manifest_from_json(Json::parse(read_file(path)));
        for (const auto& [rel, digest] : m.outputs) {
            fs::path p(rel);
            if (!p.is_absolute()) p = cfg_.output_dir / p;
            if (!fs::exists(p)) {
                fail(ErrorKind::data, "output " + rel + " of stage \"" + stage + "\" is missing; re-run \"" + stage + "\"");
            }
            if (sha256_file(p) != digest) {
                fail(ErrorKind::data, "output " + rel + " changed since stage \"" + stage +
                                          "\" wrote it (digest mismatch); re-run \"" + stage + "\"");
            }
        }
        return m;
    }

    // The raw input files must still be the ones build-index saw.
    void verify_raw_inputs() const {
        auto m = verify_upstream("build-index");
        for (const auto& [label, path] : raw_inputs()) {
            auto it = m.inputs.find(label);
            const bool exists = !path.empty() && fs::exists(path);
            if (it == m.inputs.end() && !exists) continue;
            if (it == m.inputs.end() || !exists || sha256_file(path) != it->second) {
                fail(ErrorKind::data, "input " + label + " (" + path.string() +
                                          ") changed since build-index ran; re-run build-index");
            }
        }
    }

    std::vector<std::pair<std::string, fs::path>> raw_inputs() const {
        return {{"triplets", cfg_.triplets},     {"entities", cfg_.entities}, {"properties", cfg_.properties},
                {"corpus", cfg_.corpus},         {"vectors", cfg_.vectors},   {"vector_ids", cfg_.vector_ids}};
    }

    KnowledgeGraph graph(const Catalog& cat, IngestReport* report = nullptr) const {
        const bool have_catalog = !cfg_.entities.empty() && !cfg_.properties.empty();
        return KnowledgeGraph::ingest(cfg_.triplets, cfg_.ingest_mode, have_catalog ? &cat : nullptr, report);
    }

    Corpus corpus() const {
        if (cfg_.corpus.empty()) fail(ErrorKind::usage, "this stage needs paths.corpus");
        return Corpus::load(cfg_.corpus);
    }

    std::unique_ptr<EmbeddingProvider> embedder() const {
        if (cfg_.embedding == "http") {
            return std::make_unique<HttpEmbeddingProvider>(cfg_.embedding_url, cfg_.embedding_path);
        }
        return std::make_unique<HashingEmbedder>(cfg_.embedding_dim);
    }

    std::map<std::string, std::vector<QAItem>> datasets() const {
        std::map<std::string, std::vector<QAItem>> out_sets;
        for (const auto& b : cfg_.match_buckets) out_sets[b] = read_dataset(out(bucket_file("dataset", b)));
        return out_sets;
    }

    // -----------------------------------------------------------------------

    StageManifest build_index() {
        StageRun run(cfg_, "build-index", 0, &verified_);
        for (const auto& [label, path] : raw_inputs()) run.input(label, path);

        auto cat = catalog();
        IngestReport rep;
        auto kg = graph(cat, &rep);
        Json summary{{"rows", rep.rows},
                     {"triplets", rep.stored},
                     {"duplicates", rep.duplicates},
                     {"skipped_unresolved", rep.skipped_unresolved},
                     {"subjects", kg.subject_count()},
                     {"entities", cat.entity_count()},
                     {"properties", cat.property_count()}};
        if (rep.skipped_unresolved > 0) {
            std::cerr << "warning: skipped " << rep.skipped_unresolved << " triplets with unresolvable ids\n";
        }
        if (!cfg_.corpus.empty()) {
            auto c = corpus();
            Bm25Index bm25(c, cfg_.bm25);
            summary["passages"] = c.size();
            summary["bm25_average_length"] = bm25.average_length();
            if (!cfg_.vectors.empty() && fs::exists(cfg_.vectors)) {
                auto dense = DenseIndex::load(cfg_.vectors, cfg_.vector_ids);
                for (std::size_t r = 0; r < dense.size(); ++r) {
                    if (!c.find(dense.id(r))) fail(ErrorKind::data, "vector id " + dense.id(r) + " is not in the corpus");
                }
                summary["dense_rows"] = dense.size();
                summary["dense_dimension"] = dense.dimension();
            }
        }
        run.counts() = summary;
        run.output("index_summary.json", summary.dump(2) + "\n");
        return run.commit(manifest_path("build-index"));
    }

    StageManifest stats() {
        verify_raw_inputs();
        StageRun run(cfg_, "stats", 0, &verified_);
        run.input("triplets", cfg_.triplets);
        auto cat = catalog();
        auto kg = graph(cat);
        std::string hist;
        for (const auto& b : kg.degree_histogram()) {
            hist += dump_line(Json{{"bin_lo", b.lo}, {"bin_hi", b.hi}, {"count", b.count}}) + "\n";
        }
        Json populations = Json::object();
        for (const auto& b : cfg_.buckets) {
            populations[b.name] = Json{{"min_degree", b.min_degree},
                                       {"max_degree", b.max_degree},
                                       {"entities", bucket_members(kg, b).size()}};
        }
        Json stats{{"triplets", kg.triplet_count()}, {"subjects", kg.subject_count()}, {"buckets", populations}};
        run.counts() = stats;
        run.output("degree_histogram.jsonl", hist);
        run.output("kg_stats.json", stats.dump(2) + "\n");
        return run.commit(manifest_path("stats"));
    }

    StageManifest sample() {
        verify_raw_inputs();
        StageRun run(cfg_, "sample", cfg_.sample_seed, &verified_);
        run.input("triplets", cfg_.triplets);
        auto cat = catalog();
        auto kg = graph(cat);
        for (const auto& b : cfg_.buckets) {
            SampleSpec spec{b, cfg_.count_for(b.name), derive_seed(cfg_.sample_seed, b.name)};
            auto s = sample_entities(kg, spec);
            if (s.short_population) {
                std::cerr << "warning: bucket " << b.name << " has only " << s.population
                          << " entities; taking all of them\n";
            }
            auto cands = extract_candidates(kg, s.entities, b.name);
            run.counts()[b.name] = Json{{"population", s.population},
                                        {"entities", s.entities.size()},
                                        {"triplets", cands.size()},
                                        {"short_population", s.short_population},
                                        {"min_degree", b.min_degree},
                                        {"max_degree", b.max_degree}};
            run.output(bucket_file("candidates", b.name), candidates_to_jsonl(cands));
        }
        return run.commit(manifest_path("sample"));
    }

    StageManifest filter() {
        verify_upstream("sample");
        StageRun run(cfg_, "filter", cfg_.filter_seed, &verified_);
        auto cat = catalog();

        std::map<std::string, std::vector<Candidate>> by_bucket;
        std::map<std::string, std::vector<Triplet>> by_property;
        for (const auto& b : cfg_.buckets) {
            by_bucket[b.name] = read_candidates(out(bucket_file("candidates", b.name)));
            for (const auto& c : by_bucket[b.name]) by_property[c.triplet.property].push_back(c.triplet);
        }

        for (auto& [pid, triplets] : by_property) {
            std::sort(triplets.begin(), triplets.end());
            triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());
        }

        LedgerWriter writer(cfg_.ledger);
        const auto before = writer.snapshot();
        Json properties = Json::array();
        std::map<std::string, ScreenResult> screens;
        for (auto& [pid, triplets] : by_property) {
            const auto* prop = cat.property(pid);
            if (!prop) continue;
            auto sample = draw_screen_sample(triplets, cfg_.screen_sample_size, cfg_.filter_seed, pid);
            auto screen = heuristic_screen(*prop, sample, cat, cfg_.heuristics);
            if (before.last_heuristic(pid) != screen.suggestion) writer.record(cat, pid, screen.suggestion);
            screens.emplace(pid, std::move(screen));
        }
        const auto ledger = writer.snapshot();
        run.input("ledger", cfg_.ledger);

        Json kept_props = Json::object();
        Json rejected_triplets = Json::object();
        std::set<std::string> untriaged;
        for (const auto& b : cfg_.buckets) {
            auto result = apply_filter(by_bucket[b.name], ledger, cfg_.auto_apply_heuristics);
            untriaged.insert(result.untriaged.begin(), result.untriaged.end());
            kept_props[b.name] = property_histogram(result.kept).size();
            rejected_triplets[b.name] = result.rejected.size();
            run.output(bucket_file("filtered", b.name), candidates_to_jsonl(result.kept));
        }
        for (const auto& [pid, triplets] : by_property) {
            Json row{{"property_id", pid}, {"triplets", triplets.size()}};
            if (const auto* p = cat.property(pid)) row["label"] = p->label;
            if (auto it = screens.find(pid); it != screens.end()) {
                row["suggestion"] = std::string(to_string(it->second.suggestion.kind));
                row["fired_rules"] = it->second.fired_rules;
            }
            auto eff = ledger.effective(pid, cfg_.auto_apply_heuristics);
            row["effective"] = eff ? Json{{"verdict", std::string(to_string(eff->kind))},
                                          {"source", std::string(to_string(eff->source))},
                                          {"reason", eff->reason}}
                                   : Json(nullptr);
            properties.push_back(row);
        }
        if (!untriaged.empty()) {
            std::cerr << "warning: " << untriaged.size()
                      << " properties have no verdict and were kept by default (untriaged)\n";
        }
        Json report{{"auto_apply_heuristics", cfg_.auto_apply_heuristics},
                    {"properties", properties},
                    {"untriaged", untriaged},
                    {"kept_unique_properties", kept_props},
                    {"rejected_triplets", rejected_triplets}};
        run.counts() = Json{{"properties", by_property.size()},
                            {"untriaged", untriaged.size()},
                            {"kept_unique_properties", kept_props},
                            {"rejected_triplets", rejected_triplets}};
        run.output("filter_report.json", report.dump(2) + "\n");
        return run.commit(manifest_path("filter"));
    }

    StageManifest match_difficulty() {
        verify_upstream("filter");
        verify_raw_inputs();
        StageRun run(cfg_, "match-difficulty", cfg_.difficulty_seed, &verified_);
        const auto& a = cfg_.match_buckets[0];
        const auto& b = cfg_.match_buckets[1];
        auto da = read_candidates(out(bucket_file("filtered", a)));
        auto db = read_candidates(out(bucket_file("filtered", b)));
        auto matched = match_distributions(da, db, cfg_.difficulty_seed, cfg_.difficulty_cap);

        auto cat = catalog();
        auto spaces = graph(cat).answer_spaces();
        auto emit = [&](const std::string& name, const std::vector<Candidate>& before,
                        const std::vector<Candidate>& after) {
            std::string rows;
            for (const auto& r : difficulty_rows(property_histogram(before), property_histogram(after), spaces)) {
                rows += dump_line(Json{{"property_id", r.property_id},
                                       {"count_before", r.count_before},
                                       {"count_after", r.count_after},
                                       {"answer_space", r.answer_space}}) +
                        "\n";
            }
            run.output(bucket_file("difficulty", name), rows);
            run.output(bucket_file("matched", name), candidates_to_jsonl(after));
            run.counts()[name] = Json{{"before", before.size()},
                                      {"after", after.size()},
                                      {"unique_properties", property_histogram(after).size()}};
        };
        emit(a, da, matched.first);
        emit(b, db, matched.second);
        return run.commit(manifest_path("match-difficulty"));
    }

    std::unique_ptr<CompletionBackend> generation_backend() const {
        if (cfg_.generation_backend == "http") {
            return std::make_unique<HttpCompletionBackend>(load_http_profile(cfg_.generation_profile));
        }
        return std::make_unique<MockQuestionBackend>();
    }

    StageManifest generate() {
        verify_upstream("match-difficulty");
        StageRun run(cfg_, "generate", 0, &verified_);
        auto cat = catalog();
        auto ledger = FilterLedger::load(cfg_.ledger);
        run.input("ledger", cfg_.ledger);
        auto backend = generation_backend();
        PromptTemplate tpl;
        tpl.mode = cfg_.prompt_mode;

        std::size_t failed_total = 0;
        for (const auto& b : cfg_.match_buckets) {
            auto matched = read_candidates(out(bucket_file("matched", b)));
            // Decisions recorded after the filter stage (e.g. through triage) apply here.
            auto filtered = apply_filter(matched, ledger, cfg_.auto_apply_heuristics);
            auto gen = generate_dataset(filtered.kept, b, cat, tpl, *backend, {cfg_.generation_attempts});
            std::string items;
            std::size_t flagged = 0;
            for (const auto& q : gen.items) {
                items += dump_line(qa_item_to_json(q)) + "\n";
                if (!q.flags.empty()) ++flagged;
            }
            std::string failures;
            for (const auto& q : gen.failures) failures += dump_line(qa_item_to_json(q)) + "\n";
            failed_total += gen.failures.size();
            run.output(bucket_file("dataset", b), items);
            run.output(bucket_file("generation_failures", b), failures);
            run.counts()[b] = Json{{"input_triplets", matched.size()},
                                   {"excluded_by_ledger", filtered.rejected.size()},
                                   {"items", gen.items.size()},
                                   {"failed", gen.failures.size()},
                                   {"flagged", flagged},
                                   {"backend", backend->name()}};
        }
        if (failed_total > 0) std::cerr << "warning: " << failed_total << " generation requests failed\n";
        return run.commit(manifest_path("generate"));
    }

    StageManifest retrieve() {
        verify_upstream("generate");
        verify_raw_inputs();
        StageRun run(cfg_, "retrieve", 0, &verified_);
        auto c = corpus();
        std::unique_ptr<Retriever> retriever;
        std::unique_ptr<EmbeddingProvider> provider;
        std::optional<DenseIndex> dense;
        std::size_t threads = 1;
        if (cfg_.retriever == "dense") {
            dense = DenseIndex::load(cfg_.vectors, cfg_.vector_ids);
            provider = embedder();
            retriever = std::make_unique<DenseRetriever>(*dense, *provider);
        } else {
            retriever = std::make_unique<Bm25Index>(c, cfg_.bm25);
            threads = std::max(1u, std::thread::hardware_concurrency());
        }
        for (const auto& [bucket, items] : datasets()) {
            auto lists = ordered_parallel_map(items.size(), threads, [&](std::size_t i) {
                return retriever->retrieve(items[i].qid, items[i].question, cfg_.top_k);
            });
            std::string body;
            std::map<std::string, RankedList> by_qid;
            for (auto& l : lists) {
                body += dump_line(ranked_list_to_json(l)) + "\n";
                by_qid.emplace(l.qid, std::move(l));
            }
            run.output(bucket_file("retrieved", bucket), body);
            Json recall = Json::object();
            for (const auto& [k, r] : recall_at_k(items, by_qid, c, cfg_.recall_ks)) recall[std::to_string(k)] = r;
            run.counts()[bucket] = Json{{"questions", items.size()}, {"retriever", retriever->name()}, {"recall", recall}};
        }
        return run.commit(manifest_path("retrieve"));
    }

    StageManifest rerank_stage() {
        verify_upstream("generate");
        verify_upstream("retrieve");
        verify_raw_inputs();
        StageRun run(cfg_, "rerank", 0, &verified_);
        auto cat = catalog();
        auto kg = graph(cat);
        auto c = corpus();
        auto sets = datasets();

        std::vector<Triplet> holdout;
        for (const auto& b : cfg_.match_buckets) {
            for (const auto& q : sets[b]) holdout.push_back(q.source);
            for (const auto& q : read_dataset(out(bucket_file("generation_failures", b)))) holdout.push_back(q.source);
        }
        auto removed = kg.remove_holdout(holdout);
        run.counts()["holdout_removed"] = removed.removed;

        auto provider = embedder();
        const std::size_t threads =
            cfg_.embedding == "hashing" ? std::max(1u, std::thread::hardware_concurrency()) : 1;
        for (const auto& [bucket, items] : sets) {
            auto retrieved = read_ranked_lists(out(bucket_file("retrieved", bucket)));
            struct Row {
                RerankResult result;
                std::size_t skipped = 0;
            };
            auto rows = ordered_parallel_map(items.size(), threads, [&](std::size_t i) {
                const auto& item = items[i];
                Row row;
                std::vector<std::string> texts;
                for (const auto& p : find_paths(kg, item.source.subject, cfg_.rerank)) {
                    if (auto v = verbalize(p, cat)) texts.push_back(std::move(*v));
                    else ++row.skipped;
                }
                auto it = retrieved.find(item.qid);
                RankedList empty{item.qid, cfg_.retriever, {}};
                row.result = rerank(it == retrieved.end() ? empty : it->second, texts, *provider, c, cfg_.rerank);
                return row;
            });
            std::string body;
            std::size_t no_paths = 0;
            std::size_t skipped = 0;
            std::map<std::string, RankedList> after;
            for (auto& row : rows) {
                body += dump_line(rerank_result_to_json(row.result)) + "\n";
                no_paths += row.result.no_paths ? 1 : 0;
                skipped += row.skipped;
                after.emplace(row.result.ranked.qid, row.result.ranked);
            }
            run.output(bucket_file("reranked", bucket), body);
            Json deltas = Json::object();
            for (const auto& d : rerank_report(items, retrieved, after, c, cfg_.recall_ks)) {
                deltas[std::to_string(d.k)] = Json{{"before", d.before}, {"after", d.after}, {"delta", d.delta}};
            }
            run.counts()[bucket] = Json{{"questions", items.size()},
                                        {"no_paths", no_paths},
                                        {"skipped_verbalizations", skipped},
                                        {"recall", deltas}};
        }
        return run.commit(manifest_path("rerank"));
    }

    std::unique_ptr<CompletionBackend> answer_backend(const std::map<std::string, std::vector<QAItem>>& sets) const {
        if (cfg_.answer_backend == "http") {
            return std::make_unique<HttpCompletionBackend>(load_http_profile(cfg_.answer_profile));
        }
        std::map<std::string, std::string> gold;
        for (const auto& [b, items] : sets) {
            for (const auto& q : items) gold.emplace(q.qid, q.answer);
        }
        return std::make_unique<EchoGoldBackend>(std::move(gold));
    }

    StageManifest answer() {
        verify_upstream("generate");
        StageRun run(cfg_, "answer", 0, &verified_);
        auto sets = datasets();
        auto backend = answer_backend(sets);

        const bool with_context = cfg_.answer_mode == AnswerMode::with_context;
        std::optional<Corpus> c;
        const std::string source = cfg_.context_source == "reranked" ? "reranked" : "retrieved";
        if (with_context) {
            verify_upstream(source == "reranked" ? "rerank" : "retrieve");
            c = corpus();
        }

        AnswerOptions opts;
        opts.mode = cfg_.answer_mode;
        opts.attempts = cfg_.answer_attempts;
        for (const auto& [bucket, items] : sets) {
            std::map<std::string, RankedList> lists;
            if (with_context) lists = read_ranked_lists(out(bucket_file(source, bucket)));
            ContextLookup lookup = [&](const QAItem& item) -> std::optional<ContextPassage> {
                auto it = lists.find(item.qid);
                if (it == lists.end() || it->second.entries.empty()) return std::nullopt;
                // Reranked lists are already in final order; retrieved ones use the score tiebreak.
                auto id = source == "reranked" ? std::optional(it->second.entries.front().passage_id)
                                               : top1_context(it->second);
                const auto* p = c->find(*id);
                if (!p) return std::nullopt;
                return ContextPassage{p->id, p->text};
            };
            auto preds = answer_dataset(items, *backend, opts, lookup);
            std::string body;
            std::size_t failed = 0;
            std::size_t fallback = 0;
            for (const auto& p : preds) {
                body += dump_line(prediction_to_json(p)) + "\n";
                for (const auto& f : p.flags) {
                    failed += f == "backend_failed";
                    fallback += f == "no_context";
                }
            }
            run.output(bucket_file("predictions", bucket), body);
            run.counts()[bucket] = Json{{"predictions", preds.size()},
                                        {"backend_failed", failed},
                                        {"closed_book_fallback", fallback},
                                        {"mode", std::string(to_string(cfg_.answer_mode))},
                                        {"backend", backend->name()}};
        }
        return run.commit(manifest_path("answer"));
    }

    StageManifest evaluate() {
        verify_upstream("generate");
        verify_upstream("answer");
        const bool have_retrieved = has_run("retrieve");
        const bool have_reranked = has_run("rerank");
        if (have_retrieved) verify_upstream("retrieve");
        if (have_reranked) verify_upstream("rerank");
        StageRun run(cfg_, "evaluate", cfg_.evaluate_seed, &verified_);

        auto sets = datasets();
        std::vector<ErrorAnnotation> annotations;
        if (!cfg_.annotations.empty()) {
            annotations = read_annotations(cfg_.annotations);
            run.input("annotations", cfg_.annotations);
        }
        std::map<std::string, std::string> bucket_of;
        for (const auto& [b, items] : sets) {
            for (const auto& q : items) bucket_of.emplace(q.qid, b);
        }
        for (const auto& a : annotations) {
            if (!bucket_of.contains(a.qid)) fail(ErrorKind::data, "annotation for unknown qid " + a.qid);
        }
        std::optional<Corpus> c;
        if (have_retrieved || have_reranked) c = corpus();

        for (const auto& [bucket, items] : sets) {
            auto preds = read_predictions(out(bucket_file("predictions", bucket)));
            auto report = score(bucket, items, preds);
            std::vector<ErrorAnnotation> mine;
            for (const auto& a : annotations) {
                if (bucket_of[a.qid] == bucket) mine.push_back(a);
            }
            import_error_annotations(report, mine);

            auto j = accuracy_report_to_json(report);
            std::map<std::string, RankedList> before;
            if (have_retrieved) {
                before = read_ranked_lists(out(bucket_file("retrieved", bucket)));
                Json recall = Json::object();
                for (const auto& [k, r] : recall_at_k(items, before, *c, cfg_.recall_ks)) recall[std::to_string(k)] = r;
                j["recall"] = recall;
            }
            if (have_reranked) {
                auto after = read_ranked_lists(out(bucket_file("reranked", bucket)));
                Json recall = Json::object();
                for (const auto& [k, r] : recall_at_k(items, after, *c, cfg_.recall_ks)) recall[std::to_string(k)] = r;
                j["recall_reranked"] = recall;
                if (have_retrieved) {
                    Json deltas = Json::array();
                    for (const auto& d : rerank_report(items, before, after, *c, cfg_.recall_ks)) {
                        deltas.push_back(Json{{"k", d.k}, {"before", d.before}, {"after", d.after}, {"delta", d.delta}});
                    }
                    j["rerank_deltas"] = deltas;
                }
            }

            std::map<std::string, const Prediction*> pred_by_qid;
            for (const auto& p : preds) pred_by_qid[p.qid] = &p;
            std::map<std::string, const QAItem*> item_by_qid;
            for (const auto& q : items) item_by_qid[q.qid] = &q;
            std::string misses;
            for (const auto& qid : sample_misses(report, cfg_.miss_sample_size, derive_seed(cfg_.evaluate_seed, bucket))) {
                const auto* q = item_by_qid[qid];
                auto it = pred_by_qid.find(qid);
                misses += dump_line(Json{{"qid", qid},
                                         {"question", q->question},
                                         {"answer", q->answer},
                                         {"aliases", q->aliases},
                                         {"prediction", it == pred_by_qid.end() ? Json(nullptr) : Json(it->second->prediction)}}) +
                          "\n";
            }
            run.output(bucket_file("eval", bucket, ".json"), j.dump(2) + "\n");
            run.output(bucket_file("misses_sample", bucket), misses);
            run.counts()[bucket] = Json{{"items", report.item_count},
                                        {"accuracy", report.accuracy},
                                        {"annotated", report.annotated}};
        }
        return run.commit(manifest_path("evaluate"));
    }

    // Triplets that entered generation for a bucket: matched minus ledger rejects.
    static Json dataset_triplets(std::map<std::string, StageManifest>& ms, const std::string& bucket) {
        if (!ms.contains("generate")) return nullptr;
        const auto& g = ms["generate"].counts[bucket];
        return g["input_triplets"].get<std::size_t>() - g["excluded_by_ledger"].get<std::size_t>();
    }

    StageManifest report() {
        verify_upstream("evaluate");
        StageRun run(cfg_, "report", 0, &verified_);
        Json stages = Json::array();
        std::map<std::string, StageManifest> ms;
        for (const auto& s : kChain) {
            if (s == "report" || !has_run(s)) continue;
            auto m = verify_upstream(s);
            stages.push_back(Json{{"stage", m.stage}, {"seed", m.seed}, {"outputs", m.outputs}, {"counts", m.counts}});
            ms.emplace(s, std::move(m));
        }

        Json datasets_json = Json::array();
        for (const auto& b : cfg_.match_buckets) {
            const auto& bucket = cfg_.bucket(b);
            auto items = read_dataset(out(bucket_file("dataset", b)));
            std::set<std::string> props;
            for (const auto& q : items) props.insert(q.source.property);
            Json d{{"bucket", b},
                   {"min_degree", bucket.min_degree},
                   {"max_degree", bucket.max_degree},
                   {"triplets", dataset_triplets(ms, b)},
                   {"questions", items.size()},
                   {"unique_properties", props.size()}};
            if (ms.contains("match-difficulty")) d["matched_triplets"] = ms["match-difficulty"].counts[b]["after"];
            if (ms.contains("generate")) d["generation"] = ms["generate"].counts[b];
            auto eval = Json::parse(read_file(out(bucket_file("eval", b, ".json"))));
            d["evaluation"] = eval;
            datasets_json.push_back(d);
        }

        Json filter = Json::object();
        if (has_run("filter")) {
            auto fr = Json::parse(read_file(out("filter_report.json")));
            filter["auto_apply_heuristics"] = fr["auto_apply_heuristics"];
            filter["untriaged_properties"] = fr["untriaged"];
            if (!fr["untriaged"].empty()) {
                filter["warning"] = std::to_string(fr["untriaged"].size()) +
                                    " properties were kept without any verdict; review them with `serve`";
            }
        }
        Json report{{"config_digest", cfg_.digest}, {"datasets", datasets_json}, {"filter", filter}, {"stages", stages}};
        run.counts() = Json{{"datasets", datasets_json.size()}, {"stages", stages.size()}};
        run.output("report.json", report.dump(2) + "\n");
        return run.commit(manifest_path("report"));
    }

    StageManifest embed_corpus() {
        if (cfg_.vectors.empty() || cfg_.vector_ids.empty()) {
            fail(ErrorKind::usage, "embed-corpus needs paths.vectors and paths.vector_ids");
        }
        StageRun run(cfg_, "embed-corpus", 0, &verified_);
        run.input("corpus", cfg_.corpus);
        auto c = corpus();
        auto provider = embedder();
        std::vector<std::string> texts;
        std::string ids;
        for (const auto& p : c.passages()) {
            texts.push_back(p.text);
            ids += p.id + "\n";
        }
        auto rows = provider->embed(texts);
        const auto dim = rows.empty() ? provider->dimension() : rows.front().size();
        write_vector_file(cfg_.vectors, dim, rows);
        write_file_atomic(cfg_.vector_ids, ids);
        run.counts() = Json{{"passages", rows.size()}, {"dimension", dim}, {"provider", provider->name()}};
        return run.commit(manifest_path("embed-corpus"));
    }

    const PipelineConfig& cfg_;
    mutable std::map<std::string, std::string> verified_;
    mutable std::set<std::string> checked_;
};

}  // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

const std::vector<std::string>& Pipeline::stage_names() { return kChain; }

bool Pipeline::is_stage(std::string_view name) {
    return name == "embed-corpus" || std::find(kChain.begin(), kChain.end(), name) != kChain.end();
}

fs::path Pipeline::manifest_path(const std::string& stage) const { return Stages(config_).manifest_path(stage); }

StageManifest Pipeline::run_stage(const std::string& name) {
    if (!is_stage(name)) fail(ErrorKind::usage, "unknown stage \"" + name + "\"");
    fs::create_directories(config_.output_dir);
    return Stages(config_).run(name);
}

std::vector<StageManifest> Pipeline::run_all() {
    std::vector<StageManifest> out;
    for (const auto& s : kChain) {
        if ((s == "retrieve" || s == "rerank") && config_.corpus.empty()) continue;
        if (s == "rerank" && config_.corpus.empty()) continue;
        out.push_back(run_stage(s));
    }
    return out;
}

void Pipeline::serve() {
    Stages stages(config_);
    auto candidates = stages.load_candidates_for_triage();
    TriageOptions opts;
    opts.page_size = config_.page_size;
    opts.card_samples = config_.card_samples;
    opts.screen_sample_size = config_.screen_sample_size;
    opts.seed = config_.filter_seed;
    opts.auto_apply_heuristics = config_.auto_apply_heuristics;
    opts.heuristics = config_.heuristics;
    TriageService service(stages.catalog(), candidates, config_.ledger, opts);
    TriageServer server(service, config_.static_dir);
    int port = server.bind(config_.host, config_.port);
    std::cerr << "triage service listening on http://" << config_.host << ":" << port << "/\n";
    server.listen();
}

}  // namespace longtail
