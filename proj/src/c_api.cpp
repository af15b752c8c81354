#include "longtail/longtail.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <sstream>

#include "longtail/answering.hpp"
#include "longtail/error.hpp"
#include "longtail/pipeline.hpp"
#include "longtail/synthetic.hpp"
#include "longtail/text.hpp"

struct lt_pipeline {
    longtail::Pipeline pipeline;
    std::optional<longtail::StageManifest> last;
};

struct lt_kg {
    longtail::KnowledgeGraph graph;
};

namespace {

thread_local std::string g_last_error;

lt_status to_status(longtail::ErrorKind k) {
    switch (k) {
        case longtail::ErrorKind::usage: return LT_ERR_USAGE;
        case longtail::ErrorKind::data: return LT_ERR_DATA;
        case longtail::ErrorKind::backend: return LT_ERR_BACKEND;
        case longtail::ErrorKind::not_found: return LT_ERR_NOT_FOUND;
    }
    return LT_ERR_INTERNAL;
}

template <class Fn>
lt_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return LT_OK;
    } catch (const longtail::Error& e) {
        g_last_error = e.what();
        return to_status(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LT_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LT_ERR_INTERNAL;
    }
}

char* dup(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p) throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void require(const void* p, const char* what) {
    if (!p) longtail::fail(longtail::ErrorKind::usage, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* lt_version(void) { return "0.1.0"; }

const char* lt_last_error(void) { return g_last_error.c_str(); }

void lt_free(void* p) { std::free(p); }

lt_status lt_pipeline_open(const char* config_path, const char* const* overrides, size_t n, lt_pipeline** out) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out, "out");
        std::vector<std::string> ov;
        for (size_t i = 0; i < n; ++i) {
            require(overrides[i], "override");
            ov.emplace_back(overrides[i]);
        }
        *out = new lt_pipeline{longtail::Pipeline(longtail::load_config(config_path, ov)), std::nullopt};
    });
}

lt_status lt_pipeline_run_stage(lt_pipeline* p, const char* stage) {
    return guarded([&] {
        require(p, "pipeline");
        require(stage, "stage");
        p->last = p->pipeline.run_stage(stage);
    });
}

lt_status lt_pipeline_run_all(lt_pipeline* p) {
    return guarded([&] {
        require(p, "pipeline");
        auto all = p->pipeline.run_all();
        if (!all.empty()) p->last = all.back();
    });
}

lt_status lt_pipeline_last_manifest(const lt_pipeline* p, char** json) {
    return guarded([&] {
        require(p, "pipeline");
        require(json, "json");
        if (!p->last) longtail::fail(longtail::ErrorKind::not_found, "no stage has run on this handle");
        *json = dup(longtail::manifest_to_json(*p->last).dump(2));
    });
}

lt_status lt_pipeline_serve(lt_pipeline* p) {
    return guarded([&] {
        require(p, "pipeline");
        p->pipeline.serve();
    });
}

void lt_pipeline_close(lt_pipeline* p) { delete p; }

lt_status lt_kg_open(const char* triplets, const char* entities, const char* properties, int strict, lt_kg** out) {
    return guarded([&] {
        require(triplets, "triplets");
        require(out, "out");
        longtail::Catalog catalog;
        if (entities) catalog.load_entities(entities);
        if (properties) catalog.load_properties(properties);
        const bool with_catalog = entities && properties;
        auto mode = strict ? longtail::IngestMode::strict : longtail::IngestMode::lenient;
        *out = new lt_kg{longtail::KnowledgeGraph::ingest(triplets, mode, with_catalog ? &catalog : nullptr)};
    });
}

lt_status lt_kg_degree(const lt_kg* kg, const char* entity, uint64_t* degree) {
    return guarded([&] {
        require(kg, "kg");
        require(entity, "entity");
        require(degree, "degree");
        *degree = kg->graph.degree(entity);
    });
}

uint64_t lt_kg_triplet_count(const lt_kg* kg) { return kg ? kg->graph.triplet_count() : 0; }

lt_status lt_kg_histogram_jsonl(const lt_kg* kg, char** jsonl) {
    return guarded([&] {
        require(kg, "kg");
        require(jsonl, "jsonl");
        std::string s;
        for (const auto& b : kg->graph.degree_histogram()) {
            s += longtail::dump_line(longtail::Json{{"bin_lo", b.lo}, {"bin_hi", b.hi}, {"count", b.count}}) + "\n";
        }
        *jsonl = dup(s);
    });
}

lt_status lt_kg_triplets_of_jsonl(const lt_kg* kg, const char* entity, char** jsonl) {
    return guarded([&] {
        require(kg, "kg");
        require(entity, "entity");
        require(jsonl, "jsonl");
        std::string s;
        for (const auto& t : kg->graph.triplets_of(entity)) s += longtail::dump_line(longtail::triplet_to_json(t)) + "\n";
        *jsonl = dup(s);
    });
}

lt_status lt_kg_remove_holdout_jsonl(lt_kg* kg, const char* holdout, uint64_t* removed, uint64_t* absent) {
    return guarded([&] {
        require(kg, "kg");
        require(holdout, "holdout");
        std::vector<longtail::Triplet> ts;
        std::istringstream in(holdout);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            ++n;
            if (longtail::trim(line).empty()) continue;
            longtail::Json j;
            try {
                j = longtail::Json::parse(line);
            } catch (const longtail::Json::parse_error& e) {
                longtail::fail(longtail::ErrorKind::data, "holdout line " + std::to_string(n) + ": " + e.what());
            }
            ts.push_back(longtail::triplet_from_json(j, "holdout line " + std::to_string(n)));
        }
        auto r = kg->graph.remove_holdout(ts);
        if (removed) *removed = r.removed;
        if (absent) *absent = r.absent;
    });
}

void lt_kg_close(lt_kg* kg) { delete kg; }

lt_status lt_normalize(const char* text, char** out) {
    return guarded([&] {
        require(text, "text");
        require(out, "out");
        *out = dup(longtail::normalize(text));
    });
}

lt_status lt_exact_match(const char* prediction, const char* label, const char* const* aliases, size_t n, int* match) {
    return guarded([&] {
        require(prediction, "prediction");
        require(label, "label");
        require(match, "match");
        std::vector<std::string> al;
        for (size_t i = 0; i < n; ++i) {
            require(aliases[i], "alias");
            al.emplace_back(aliases[i]);
        }
        *match = longtail::exact_match(prediction, label, al) ? 1 : 0;
    });
}

lt_status lt_synthesize(const char* dir, uint64_t entities, uint64_t seed) {
    return guarded([&] {
        require(dir, "dir");
        longtail::SyntheticOptions o;
        o.entities = entities;
        o.seed = seed;
        longtail::write_synthetic(dir, o);
    });
}

}  // extern "C"
