#include "longtail/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "longtail/error.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Corpus

Corpus Corpus::from_passages(std::vector<Passage> passages) {
    if (passages.empty()) fail(ErrorKind::data, "corpus is empty");
    Corpus c;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        const auto& p = passages[i];
        if (p.id.empty()) fail(ErrorKind::data, "passage with empty id");
        if (trim(p.text).empty()) fail(ErrorKind::data, "passage " + p.id + " has empty text");
        if (!c.by_id_.emplace(p.id, i).second) fail(ErrorKind::data, "duplicate passage id " + p.id);
        c.normalized_.push_back(normalize(p.text));
    }
    c.passages_ = std::move(passages);
    return c;
}

Corpus Corpus::load(const fs::path& path) {
    std::vector<Passage> passages;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        auto where = path.string() + ":" + std::to_string(line);
        passages.push_back(Passage{require_string(j, "id", where), j.value("title", std::string{}),
                                   require_string(j, "text", where)});
    });
    if (passages.empty()) fail(ErrorKind::data, "corpus " + path.string() + " is empty");
    return from_passages(std::move(passages));
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? std::nullopt : std::optional<std::size_t>(it->second);
}

const Passage* Corpus::find(std::string_view id) const {
    auto i = index_of(id);
    return i ? &passages_[*i] : nullptr;
}

// ---------------------------------------------------------------------------
// Ranked lists

void sort_ranked(std::vector<ScoredPassage>& entries) {
    std::sort(entries.begin(), entries.end(), [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    });
}

Json ranked_list_to_json(const RankedList& list) {
    Json ranking = Json::array();
    for (const auto& e : list.entries) ranking.push_back(Json{{"passage", e.passage_id}, {"score", e.score}});
    return Json{{"qid", list.qid}, {"retriever", list.retriever}, {"ranking", ranking}};
}

RankedList ranked_list_from_json(const Json& j, const std::string& where) {
    RankedList l;
    l.qid = require_string(j, "qid", where);
    l.retriever = j.value("retriever", std::string{});
    auto it = j.find("ranking");
    if (it == j.end() || !it->is_array()) fail(ErrorKind::data, where + ": missing \"ranking\" array");
    for (const auto& e : *it) {
        ScoredPassage s;
        s.passage_id = require_string(e, "passage", where);
        if (e.contains("score")) s.score = e["score"].get<double>();
        else s.score = e.value("orig_score", 0.0);
        l.entries.push_back(std::move(s));
    }
    return l;
}

std::map<std::string, RankedList> read_ranked_lists(const fs::path& path) {
    std::map<std::string, RankedList> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        auto l = ranked_list_from_json(j, path.string() + ":" + std::to_string(line));
        auto qid = l.qid;
        out.insert_or_assign(std::move(qid), std::move(l));
    });
    return out;
}

namespace {

RankedList top_k(const std::string& qid, const std::string& retriever, std::vector<ScoredPassage> all,
                 std::size_t k) {
    if (k == 0) fail(ErrorKind::usage, "retrieve needs k >= 1");
    k = std::min(k, all.size());
    auto cmp = [](const ScoredPassage& a, const ScoredPassage& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.passage_id < b.passage_id;
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), cmp);
    all.resize(k);
    return RankedList{qid, retriever, std::move(all)};
}

}  // namespace

// ---------------------------------------------------------------------------
// BM25

Bm25Index::Bm25Index(const Corpus& corpus, Bm25Params params) : corpus_(&corpus), params_(params) {
    std::uint64_t total = 0;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        std::unordered_map<std::string, std::uint32_t> tf;
        auto tokens = tokenize(corpus.at(d).text);
        for (auto& t : tokens) ++tf[t];
        doc_len_.push_back(static_cast<std::uint32_t>(tokens.size()));
        total += tokens.size();
        for (auto& [term, n] : tf) postings_[term].push_back(Posting{static_cast<std::uint32_t>(d), n});
    }
    avgdl_ = corpus.size() ? static_cast<double>(total) / static_cast<double>(corpus.size()) : 0.0;
}

double Bm25Index::idf(const std::string& term) const {
    const auto n = static_cast<double>(corpus_->size());
    auto it = postings_.find(term);
    const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::scores_for(std::string_view query) const {
    std::vector<double> scores(corpus_->size(), 0.0);
    for (const auto& term : tokenize(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& p : it->second) {
            const double tf = p.tf;
            const double norm = params_.k1 * (1.0 - params_.b + params_.b * doc_len_[p.doc] / avgdl_);
            scores[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + norm);
        }
    }
    return scores;
}

double Bm25Index::score(std::string_view query, std::size_t doc) const { return scores_for(query).at(doc); }

RankedList Bm25Index::retrieve(const std::string& qid, std::string_view question, std::size_t k) const {
    auto scores = scores_for(question);
    std::vector<ScoredPassage> all;
    all.reserve(scores.size());
    for (std::size_t d = 0; d < scores.size(); ++d) all.push_back(ScoredPassage{corpus_->at(d).id, scores[d]});
    return top_k(qid, name(), std::move(all), k);
}

// ---------------------------------------------------------------------------
// Embeddings

std::vector<std::vector<float>> HashingEmbedder::embed(std::span<const std::string> texts) {
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<float> v(dim_, 0.0f);
        for (const auto& tok : tokenize(text)) {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (unsigned char c : tok) h = (h ^ c) * 0x100000001b3ULL;
            v[h % dim_] += 1.0f;
        }
        out.push_back(std::move(v));
    }
    return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) fail(ErrorKind::data, "cosine of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// Vector files

namespace {

constexpr char kVectorMagic[4] = {'L', 'T', 'V', 'F'};
constexpr std::uint32_t kVectorVersion = 1;

template <class T>
void put_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), sizeof buf);
}

template <class T>
T get_le(std::istream& in, const std::string& path) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) fail(ErrorKind::data, path + ": truncated vector file");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_vector_file(const fs::path& path, std::size_t dimension, std::span<const std::vector<float>> rows) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::data, "cannot write " + tmp.string());
        out.write(kVectorMagic, 4);
        put_le<std::uint32_t>(out, kVectorVersion);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(dimension));
        put_le<std::uint64_t>(out, rows.size());
        for (const auto& row : rows) {
            if (row.size() != dimension) fail(ErrorKind::data, "vector row with wrong dimension");
            for (float f : row) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
        }
        if (!out) fail(ErrorKind::data, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

DenseIndex DenseIndex::from_rows(std::vector<std::string> ids, std::size_t dimension,
                                 std::span<const std::vector<float>> rows) {
    if (ids.size() != rows.size()) {
        fail(ErrorKind::data, "dense index has " + std::to_string(rows.size()) + " vectors but " +
                                  std::to_string(ids.size()) + " ids");
    }
    if (dimension == 0) fail(ErrorKind::data, "dense index with zero dimension");
    DenseIndex idx;
    idx.dim_ = dimension;
    idx.data_.reserve(rows.size() * dimension);
    for (const auto& row : rows) {
        if (row.size() != dimension) fail(ErrorKind::data, "dense vector with wrong dimension");
        double norm = 0;
        for (float f : row) norm += static_cast<double>(f) * f;
        norm = std::sqrt(norm);
        for (float f : row) idx.data_.push_back(norm > 0 ? f / norm : 0.0);
    }
    idx.ids_ = std::move(ids);
    return idx;
}

DenseIndex DenseIndex::load(const fs::path& vectors_path, const fs::path& ids_path) {
    std::ifstream in(vectors_path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open vector file " + vectors_path.string());
    const auto where = vectors_path.string();
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kVectorMagic, 4) != 0) fail(ErrorKind::data, where + ": bad magic");
    auto version = get_le<std::uint32_t>(in, where);
    if (version != kVectorVersion) fail(ErrorKind::data, where + ": unsupported version " + std::to_string(version));
    auto dim = get_le<std::uint32_t>(in, where);
    auto count = get_le<std::uint64_t>(in, where);

    std::vector<std::vector<float>> rows(count, std::vector<float>(dim));
    for (auto& row : rows) {
        for (auto& f : row) f = std::bit_cast<float>(get_le<std::uint32_t>(in, where));
    }

    std::ifstream ids_in(ids_path);
    if (!ids_in) fail(ErrorKind::data, "cannot open id file " + ids_path.string());
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(ids_in, line)) {
        auto t = trim(line);
        if (!t.empty()) ids.emplace_back(t);
    }
    return from_rows(std::move(ids), dim, rows);
}

RankedList DenseRetriever::retrieve(const std::string& qid, std::string_view question, std::size_t k) const {
    std::string q(question);
    auto emb = provider_->embed(std::span<const std::string>(&q, 1));
    if (emb.size() != 1 || emb[0].size() != index_->dimension()) {
        fail(ErrorKind::backend, "embedding dimension does not match the dense index");
    }
    const auto& v = emb[0];
    double norm = 0;
    for (float f : v) norm += static_cast<double>(f) * f;
    norm = std::sqrt(norm);

    std::vector<ScoredPassage> all;
    all.reserve(index_->size());
    for (std::size_t r = 0; r < index_->size(); ++r) {
        double dot = 0;
        auto row = index_->row(r);
        if (norm > 0) {
            for (std::size_t i = 0; i < row.size(); ++i) dot += row[i] * (v[i] / norm);
        }
        all.push_back(ScoredPassage{index_->id(r), dot});
    }
    return top_k(qid, name(), std::move(all), k);
}

// ---------------------------------------------------------------------------
// Recall

bool passage_contains_answer(const std::string& normalized_passage, const QAItem& item) {
    auto check = [&](std::string_view surface) {
        auto n = normalize(surface);
        return !n.empty() && normalized_passage.find(n) != std::string::npos;
    };
    if (check(item.answer)) return true;
    return std::any_of(item.aliases.begin(), item.aliases.end(), check);
}

std::map<std::size_t, double> recall_at_k(std::span<const QAItem> items, const std::map<std::string, RankedList>& lists,
                                          const Corpus& corpus, std::span<const std::size_t> ks) {
    std::map<std::size_t, std::size_t> hits;
    for (auto k : ks) hits[k] = 0;
    for (const auto& item : items) {
        auto it = lists.find(item.qid);
        if (it == lists.end()) continue;
        // Rank of the first answer-bearing passage decides every k at once.
        std::optional<std::size_t> first_hit;
        const auto& entries = it->second.entries;
        for (std::size_t r = 0; r < entries.size(); ++r) {
            auto idx = corpus.index_of(entries[r].passage_id);
            if (idx && passage_contains_answer(corpus.normalized_text(*idx), item)) {
                first_hit = r;
                break;
            }
        }
        if (!first_hit) continue;
        for (auto& [k, n] : hits) {
            if (*first_hit < k) ++n;
        }
    }
    std::map<std::size_t, double> out;
    for (const auto& [k, n] : hits) {
        out[k] = items.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(items.size());
    }
    return out;
}

std::optional<std::string> top1_context(const RankedList& list) {
    if (list.entries.empty()) return std::nullopt;
    const auto best = std::min_element(list.entries.begin(), list.entries.end(),
                                       [](const ScoredPassage& a, const ScoredPassage& b) {
                                           if (a.score != b.score) return a.score > b.score;
                                           return a.passage_id < b.passage_id;
                                       });
    return best->passage_id;
}

}  // namespace longtail
