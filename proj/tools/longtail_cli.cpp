// Command-line front end. Talks to the library only through longtail.h.
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "longtail/longtail.h"

namespace {

int exit_code(lt_status s) {
    switch (s) {
        case LT_OK: return 0;
        case LT_ERR_USAGE: return 1;
        case LT_ERR_DATA:
        case LT_ERR_NOT_FOUND: return 2;
        default: return 3;
    }
}

int report(lt_status s) {
    if (s != LT_OK) std::cerr << "error: " << lt_last_error() << "\n";
    return exit_code(s);
}

struct Common {
    std::string config = "config.ini";
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "pipeline config file")->capture_default_str();
    cmd->add_option("--set", c.sets, "override a config value, section.key=value")->take_all();
}

struct PipelineHandle {
    lt_pipeline* p = nullptr;
    ~PipelineHandle() { lt_pipeline_close(p); }
};

lt_status open_pipeline(const Common& c, const std::vector<std::string>& extra, PipelineHandle& h) {
    std::vector<const char*> ov;
    for (const auto& s : c.sets) ov.push_back(s.c_str());
    for (const auto& s : extra) ov.push_back(s.c_str());
    return lt_pipeline_open(c.config.c_str(), ov.data(), ov.size(), &h.p);
}

int print_manifest(const PipelineHandle& h) {
    char* json = nullptr;
    auto s = lt_pipeline_last_manifest(h.p, &json);
    if (s != LT_OK) return report(s);
    std::cout << json << "\n";
    lt_free(json);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Long-tail knowledge QA dataset pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lt_version()));

    const std::vector<std::string> stages{"build-index", "stats", "sample", "filter", "match-difficulty", "generate",
                                          "retrieve", "rerank", "answer", "evaluate", "report", "embed-corpus"};
    std::map<std::string, Common> common;
    std::map<std::string, std::vector<std::string>> extra;
    std::map<std::string, CLI::App*> cmds;
    for (const auto& s : stages) {
        auto* cmd = app.add_subcommand(s, "run the " + s + " stage");
        add_common(cmd, common[s]);
        cmds[s] = cmd;
    }
    cmds["filter"]->alias("filter-properties");

    bool auto_apply = false;
    cmds["filter"]->add_flag("--auto-apply", auto_apply, "apply heuristic verdicts without review");

    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> entity_count;
    cmds["sample"]->add_option("--seed", seed);
    cmds["sample"]->add_option("--entity-count", entity_count);

    std::optional<std::uint64_t> depth;
    std::optional<std::uint64_t> max_paths;
    std::optional<std::string> combine;
    std::optional<double> alpha;
    cmds["rerank"]->add_option("--depth", depth, "maximum path length in hops");
    cmds["rerank"]->add_option("--max-paths", max_paths);
    cmds["rerank"]->add_option("--combine", combine)->check(CLI::IsMember({"similarity_only", "convex"}));
    cmds["rerank"]->add_option("--alpha", alpha);

    std::optional<std::string> gen_mode;
    cmds["generate"]->add_option("--mode", gen_mode)->check(CLI::IsMember({"full_triplet", "subject_property"}));
    std::optional<std::string> answer_mode;
    std::optional<std::string> context;
    cmds["answer"]->add_option("--mode", answer_mode)->check(CLI::IsMember({"closed_book", "with_context"}));
    cmds["answer"]->add_option("--context", context)->check(CLI::IsMember({"retrieved", "reranked"}));

    Common all_common;
    auto* run_all = app.add_subcommand("run-all", "run every stage in order");
    add_common(run_all, all_common);

    Common serve_common;
    std::optional<std::string> host;
    std::optional<int> port;
    auto* serve = app.add_subcommand("serve", "serve the property triage API and UI");
    add_common(serve, serve_common);
    serve->add_option("--host", host);
    serve->add_option("--port", port);

    std::string kg_triplets;
    std::string kg_entity;
    auto* degree = app.add_subcommand("degree", "print the subject degree of an entity");
    degree->add_option("--triplets", kg_triplets)->required();
    degree->add_option("--entity", kg_entity)->required();

    std::string synth_dir;
    std::uint64_t synth_entities = 1000;
    std::uint64_t synth_seed = 7;
    auto* synth = app.add_subcommand("synth", "write a synthetic graph, corpus and config");
    synth->add_option("--out", synth_dir)->required();
    synth->add_option("--entities", synth_entities)->capture_default_str();
    synth->add_option("--seed", synth_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    auto opt = [](auto& v, const std::string& key, std::vector<std::string>& out) {
        if (v) {
            std::ostringstream s;
            s << key << "=" << *v;
            out.push_back(s.str());
        }
    };
    if (auto_apply) extra["filter"].push_back("filter.auto_apply_heuristics=true");
    opt(seed, "sample.seed", extra["sample"]);
    opt(entity_count, "sample.entity_count", extra["sample"]);
    opt(depth, "rerank.depth", extra["rerank"]);
    opt(max_paths, "rerank.max_paths", extra["rerank"]);
    opt(combine, "rerank.combine", extra["rerank"]);
    opt(alpha, "rerank.alpha", extra["rerank"]);
    opt(gen_mode, "generate.mode", extra["generate"]);
    opt(answer_mode, "answer.mode", extra["answer"]);
    opt(context, "answer.context", extra["answer"]);

    for (const auto& s : stages) {
        if (!cmds[s]->parsed()) continue;
        PipelineHandle h;
        if (auto st = open_pipeline(common[s], extra[s], h); st != LT_OK) return report(st);
        if (auto st = lt_pipeline_run_stage(h.p, s.c_str()); st != LT_OK) return report(st);
        return print_manifest(h);
    }
    if (run_all->parsed()) {
        PipelineHandle h;
        if (auto st = open_pipeline(all_common, {}, h); st != LT_OK) return report(st);
        if (auto st = lt_pipeline_run_all(h.p); st != LT_OK) return report(st);
        return print_manifest(h);
    }
    if (serve->parsed()) {
        std::vector<std::string> ov;
        opt(host, "serve.host", ov);
        opt(port, "serve.port", ov);
        PipelineHandle h;
        if (auto st = open_pipeline(serve_common, ov, h); st != LT_OK) return report(st);
        return report(lt_pipeline_serve(h.p));
    }
    if (degree->parsed()) {
        lt_kg* kg = nullptr;
        if (auto st = lt_kg_open(kg_triplets.c_str(), nullptr, nullptr, 0, &kg); st != LT_OK) return report(st);
        std::uint64_t d = 0;
        auto st = lt_kg_degree(kg, kg_entity.c_str(), &d);
        lt_kg_close(kg);
        if (st != LT_OK) return report(st);
        std::cout << d << "\n";
        return 0;
    }
    if (synth->parsed()) {
        auto st = lt_synthesize(synth_dir.c_str(), synth_entities, synth_seed);
        if (st == LT_OK) std::cout << "wrote " << synth_dir << "/config.ini\n";
        return report(st);
    }
    return 1;
}
