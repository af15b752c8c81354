#include "longtail/config.hpp"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "longtail/digest.hpp"
#include "longtail/error.hpp"
#include "longtail/ini.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"paths",
         {"triplets", "entities", "properties", "corpus", "vectors", "vector_ids", "output_dir", "ledger",
          "annotations", "blocklist", "static_dir"}},
        {"ingest", {"mode"}},
        {"sample", {"seed", "entity_count"}},
        {"filter",
         {"auto_apply_heuristics", "screen_sample_size", "seed", "url_media_threshold", "answer_leak_threshold"}},
        {"difficulty", {"seed", "match", "cap"}},
        {"generate", {"backend", "profile", "mode", "attempts"}},
        {"answer", {"backend", "profile", "mode", "context", "attempts"}},
        {"retrieval",
         {"retriever", "k", "k1", "b", "recall_ks", "embedding", "embedding_dim", "embedding_url", "embedding_path"}},
        {"rerank", {"depth", "max_paths", "combine", "alpha"}},
        {"evaluate", {"miss_sample_size", "seed"}},
        {"serve", {"host", "port", "page_size", "card_samples"}},
    };
    return keys;
}

void check_keys(const IniTree& tree) {
    for (const auto& [section, body] : tree) {
        if (body.empty()) fail(ErrorKind::usage, "config key \"" + section + "\" is outside any section");
        if (section == "buckets") continue;
        auto it = known_keys().find(section);
        if (it == known_keys().end()) fail(ErrorKind::usage, "unknown config section [" + section + "]");
        for (const auto& [key, _] : body) {
            if (section == "sample" && key.starts_with("entity_count_")) continue;
            if (!it->second.contains(key)) fail(ErrorKind::usage, "unknown config key " + section + "." + key);
        }
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        auto n = std::stoull(v, &pos);
        if (pos == v.size() && !v.starts_with('-')) return n;
    } catch (const std::logic_error&) {
    }
    fail(ErrorKind::usage, "config " + key + ": expected a non-negative integer, got \"" + v + "\"");
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        auto d = std::stod(v, &pos);
        if (pos == v.size()) return d;
    } catch (const std::logic_error&) {
    }
    fail(ErrorKind::usage, "config " + key + ": expected a number, got \"" + v + "\"");
}

bool to_bool(const std::string& key, const std::string& v) {
    auto l = to_lower(v);
    if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
    if (l == "false" || l == "no" || l == "0" || l == "off") return false;
    fail(ErrorKind::usage, "config " + key + ": expected a boolean, got \"" + v + "\"");
}

std::optional<std::size_t> to_count(const std::string& key, const std::string& v) {
    if (to_lower(v) == "all") return std::nullopt;
    auto n = to_u64(key, v);
    if (n == 0) fail(ErrorKind::usage, "config " + key + ": entity count must be positive or \"all\"");
    return n;
}

std::vector<std::string> to_list(const std::string& v) {
    std::vector<std::string> out;
    for (const auto& part : split(v, ',')) {
        auto t = trim(part);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

DegreeBucket to_bucket(const std::string& name, const std::string& v) {
    auto dash = v.find('-');
    if (dash == std::string::npos) fail(ErrorKind::usage, "bucket " + name + ": expected \"min-max\", got \"" + v + "\"");
    auto key = "buckets." + name;
    return DegreeBucket{name, to_u64(key, std::string(trim(v.substr(0, dash)))),
                        to_u64(key, std::string(trim(v.substr(dash + 1))))};
}

}  // namespace

std::optional<std::size_t> PipelineConfig::count_for(const std::string& name) const {
    if (auto it = bucket_counts.find(name); it != bucket_counts.end()) return it->second;
    return entity_count;
}

const DegreeBucket& PipelineConfig::bucket(const std::string& name) const {
    for (const auto& b : buckets) {
        if (b.name == name) return b;
    }
    fail(ErrorKind::usage, "unknown degree bucket " + name);
}

PipelineConfig parse_config(const std::string& ini_text, const fs::path& base_dir,
                            const std::vector<std::string>& overrides) {
    IniTree tree;
    {
        std::istringstream in(ini_text);
        try {
            pt::ini_parser::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            fail(ErrorKind::usage, "invalid config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
        }
    }
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            fail(ErrorKind::usage, "override \"" + o + "\" must look like section.key=value");
        }
        auto key = std::string(trim(o.substr(0, eq)));
        tree.put(pt::ptree::path_type(key, '.'), std::string(trim(o.substr(eq + 1))));
    }
    check_keys(tree);

    PipelineConfig c;
    c.base_dir = base_dir;
    auto get = [&](const std::string& key) { return ini_get(tree, key); };
    auto path_of = [&](const std::string& key) -> fs::path {
        auto v = get(key);
        if (!v || v->empty()) return {};
        fs::path p(*v);
        return p.is_absolute() ? p : base_dir / p;
    };

    c.triplets = path_of("paths.triplets");
    c.entities = path_of("paths.entities");
    c.properties = path_of("paths.properties");
    c.corpus = path_of("paths.corpus");
    c.vectors = path_of("paths.vectors");
    c.vector_ids = path_of("paths.vector_ids");
    c.output_dir = path_of("paths.output_dir");
    if (c.output_dir.empty()) c.output_dir = base_dir / "out";
    c.ledger = path_of("paths.ledger");
    if (c.ledger.empty()) c.ledger = c.output_dir / "filter_ledger.jsonl";
    c.annotations = path_of("paths.annotations");
    c.blocklist = path_of("paths.blocklist");
    c.static_dir = path_of("paths.static_dir");
    if (c.triplets.empty()) fail(ErrorKind::usage, "config needs paths.triplets");

    if (auto v = get("ingest.mode")) {
        if (*v == "strict") c.ingest_mode = IngestMode::strict;
        else if (*v == "lenient") c.ingest_mode = IngestMode::lenient;
        else fail(ErrorKind::usage, "ingest.mode must be strict or lenient");
    }

    if (auto section = tree.get_child_optional("buckets"); section && !section->empty()) {
        c.buckets.clear();
        for (const auto& [name, node] : *section) c.buckets.push_back(to_bucket(name, node.data()));
    }
    validate_buckets(c.buckets);

    if (auto v = get("sample.seed")) c.sample_seed = to_u64("sample.seed", *v);
    if (auto v = get("sample.entity_count")) c.entity_count = to_count("sample.entity_count", *v);
    if (auto section = tree.get_child_optional("sample")) {
        for (const auto& [key, node] : *section) {
            if (!key.starts_with("entity_count_")) continue;
            auto name = key.substr(std::string("entity_count_").size());
            c.bucket(name);
            c.bucket_counts[name] = to_count("sample." + key, node.data());
        }
    }

    if (auto v = get("filter.auto_apply_heuristics")) c.auto_apply_heuristics = to_bool("filter.auto_apply_heuristics", *v);
    if (auto v = get("filter.screen_sample_size")) c.screen_sample_size = to_u64("filter.screen_sample_size", *v);
    if (auto v = get("filter.seed")) c.filter_seed = to_u64("filter.seed", *v);
    if (auto v = get("filter.url_media_threshold")) c.heuristics.url_media_threshold = to_double("filter.url_media_threshold", *v);
    if (auto v = get("filter.answer_leak_threshold")) c.heuristics.answer_leak_threshold = to_double("filter.answer_leak_threshold", *v);
    if (!c.blocklist.empty()) c.heuristics.blocklist = load_blocklist(c.blocklist);

    if (auto v = get("difficulty.seed")) c.difficulty_seed = to_u64("difficulty.seed", *v);
    if (auto v = get("difficulty.cap")) {
        if (to_lower(*v) != "none") c.difficulty_cap = to_u64("difficulty.cap", *v);
    }
    if (auto v = get("difficulty.match")) c.match_buckets = to_list(*v);
    else {
        for (std::size_t i = 0; i < c.buckets.size() && i < 2; ++i) c.match_buckets.push_back(c.buckets[i].name);
    }
    if (c.match_buckets.size() != 2 || c.match_buckets[0] == c.match_buckets[1]) {
        fail(ErrorKind::usage, "difficulty.match must name two different buckets");
    }
    for (const auto& m : c.match_buckets) c.bucket(m);

    if (auto v = get("generate.backend")) c.generation_backend = *v;
    c.generation_profile = path_of("generate.profile");
    if (auto v = get("generate.mode")) c.prompt_mode = parse_prompt_mode(*v);
    if (auto v = get("generate.attempts")) c.generation_attempts = static_cast<int>(to_u64("generate.attempts", *v));
    if (c.generation_backend != "mock" && c.generation_backend != "http") {
        fail(ErrorKind::usage, "generate.backend must be mock or http");
    }
    if (c.generation_backend == "http" && c.generation_profile.empty()) {
        fail(ErrorKind::usage, "generate.backend = http needs generate.profile");
    }

    if (auto v = get("answer.backend")) c.answer_backend = *v;
    c.answer_profile = path_of("answer.profile");
    if (auto v = get("answer.mode")) c.answer_mode = parse_answer_mode(*v);
    if (auto v = get("answer.context")) c.context_source = *v;
    if (auto v = get("answer.attempts")) c.answer_attempts = static_cast<int>(to_u64("answer.attempts", *v));
    if (c.answer_backend != "echo_gold" && c.answer_backend != "http") {
        fail(ErrorKind::usage, "answer.backend must be echo_gold or http");
    }
    if (c.answer_backend == "http" && c.answer_profile.empty()) {
        fail(ErrorKind::usage, "answer.backend = http needs answer.profile");
    }
    if (c.context_source != "retrieved" && c.context_source != "reranked") {
        fail(ErrorKind::usage, "answer.context must be retrieved or reranked");
    }

    if (auto v = get("retrieval.retriever")) c.retriever = *v;
    if (c.retriever != "bm25" && c.retriever != "dense") fail(ErrorKind::usage, "retrieval.retriever must be bm25 or dense");
    if (auto v = get("retrieval.k")) c.top_k = to_u64("retrieval.k", *v);
    if (c.top_k == 0) fail(ErrorKind::usage, "retrieval.k must be >= 1");
    if (auto v = get("retrieval.k1")) c.bm25.k1 = to_double("retrieval.k1", *v);
    if (auto v = get("retrieval.b")) c.bm25.b = to_double("retrieval.b", *v);
    if (auto v = get("retrieval.recall_ks")) {
        c.recall_ks.clear();
        for (const auto& k : to_list(*v)) c.recall_ks.push_back(to_u64("retrieval.recall_ks", k));
        if (c.recall_ks.empty()) fail(ErrorKind::usage, "retrieval.recall_ks is empty");
    }
    if (auto v = get("retrieval.embedding")) c.embedding = *v;
    if (c.embedding != "hashing" && c.embedding != "http") fail(ErrorKind::usage, "retrieval.embedding must be hashing or http");
    if (auto v = get("retrieval.embedding_dim")) c.embedding_dim = to_u64("retrieval.embedding_dim", *v);
    if (auto v = get("retrieval.embedding_url")) c.embedding_url = *v;
    if (auto v = get("retrieval.embedding_path")) c.embedding_path = *v;
    if (c.embedding == "http" && c.embedding_url.empty()) {
        fail(ErrorKind::usage, "retrieval.embedding = http needs retrieval.embedding_url");
    }
    if (c.retriever == "dense" && (c.vectors.empty() || c.vector_ids.empty())) {
        fail(ErrorKind::usage, "dense retrieval needs paths.vectors and paths.vector_ids");
    }

    if (auto v = get("rerank.depth")) c.rerank.max_depth = to_u64("rerank.depth", *v);
    if (auto v = get("rerank.max_paths")) c.rerank.max_paths = to_u64("rerank.max_paths", *v);
    if (auto v = get("rerank.combine")) c.rerank.combine = parse_combine_rule(*v);
    if (auto v = get("rerank.alpha")) c.rerank.alpha = to_double("rerank.alpha", *v);
    validate(c.rerank);

    if (auto v = get("evaluate.miss_sample_size")) c.miss_sample_size = to_u64("evaluate.miss_sample_size", *v);
    if (auto v = get("evaluate.seed")) c.evaluate_seed = to_u64("evaluate.seed", *v);

    if (auto v = get("serve.host")) c.host = *v;
    if (auto v = get("serve.port")) c.port = static_cast<int>(to_u64("serve.port", *v));
    if (auto v = get("serve.page_size")) c.page_size = to_u64("serve.page_size", *v);
    if (auto v = get("serve.card_samples")) c.card_samples = to_u64("serve.card_samples", *v);
    if (c.page_size == 0) fail(ErrorKind::usage, "serve.page_size must be >= 1");

    std::map<std::string, std::string> canonical;
    for (const auto& [section, body] : tree) {
        for (const auto& [key, node] : body) canonical[section + "." + key] = node.data();
    }
    std::string listing;
    for (const auto& [k, v] : canonical) listing += k + "=" + v + "\n";
    c.digest = sha256_hex(listing);
    return c;
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
    if (!fs::exists(path)) fail(ErrorKind::usage, "config file " + path.string() + " does not exist");
    auto base = fs::absolute(path).parent_path();
    return parse_config(read_file(path), base, overrides);
}

}  // namespace longtail
