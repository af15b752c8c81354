#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "longtail/jsonl.hpp"
#include "longtail/question_gen.hpp"

namespace longtail {

struct Passage {
    std::string id;
    std::string title;
    std::string text;
};

// Passage collection with precomputed normalized text for containment checks.
class Corpus {
public:
    // Line-delimited {"id","title","text"}. Empty corpora, duplicate ids and
    // empty texts are data errors.
    static Corpus load(const std::filesystem::path& path);
    static Corpus from_passages(std::vector<Passage> passages);

    std::size_t size() const { return passages_.size(); }
    const Passage& at(std::size_t i) const { return passages_[i]; }
    const std::vector<Passage>& passages() const { return passages_; }
    std::optional<std::size_t> index_of(std::string_view id) const;
    const Passage* find(std::string_view id) const;
    const std::string& normalized_text(std::size_t i) const { return normalized_[i]; }

private:
    std::vector<Passage> passages_;
    std::vector<std::string> normalized_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;
    bool operator==(const ScoredPassage&) const = default;
};

struct RankedList {
    std::string qid;
    std::string retriever;
    std::vector<ScoredPassage> entries;  // descending score, ties by ascending id
    bool operator==(const RankedList&) const = default;
};

// Orders by descending score, ties broken by ascending passage id.
void sort_ranked(std::vector<ScoredPassage>& entries);

Json ranked_list_to_json(const RankedList& list);
RankedList ranked_list_from_json(const Json& j, const std::string& where);
std::map<std::string, RankedList> read_ranked_lists(const std::filesystem::path& path);

class Retriever {
public:
    virtual ~Retriever() = default;
    virtual std::string name() const = 0;
    // min(k, corpus size) entries. k must be >= 1.
    virtual RankedList retrieve(const std::string& qid, std::string_view question, std::size_t k) const = 0;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

// Okapi BM25 over passage text, with idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
// Repeated query tokens each contribute.
class Bm25Index final : public Retriever {
public:
    Bm25Index(const Corpus& corpus, Bm25Params params = {});

    std::string name() const override { return "bm25"; }
    RankedList retrieve(const std::string& qid, std::string_view question, std::size_t k) const override;

    double idf(const std::string& term) const;
    double score(std::string_view query, std::size_t doc) const;
    double average_length() const { return avgdl_; }

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };
    std::vector<double> scores_for(std::string_view query) const;

    const Corpus* corpus_;
    Bm25Params params_;
    std::vector<std::uint32_t> doc_len_;
    double avgdl_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

// Maps texts to fixed-dimension vectors. Same text, same vector.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
};

// Bag-of-words counts hashed into `dimension` buckets. Two texts with the
// same token multiset get identical vectors.
class HashingEmbedder final : public EmbeddingProvider {
public:
    explicit HashingEmbedder(std::size_t dimension = 1024) : dim_(dimension) {}
    std::string name() const override { return "hashing_bow"; }
    std::size_t dimension() const override { return dim_; }
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    std::size_t dim_;
};

// POST {"texts": [...]} -> {"vectors": [[...], ...]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string base_url, std::string path = "/embed", std::size_t batch_size = 64,
                          std::chrono::seconds timeout = std::chrono::seconds(30));
    std::string name() const override { return "http_embedding"; }
    // 0 until the first response arrives.
    std::size_t dimension() const override { return dim_; }
    std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;

private:
    std::string base_url_;
    std::string path_;
    std::size_t batch_size_;
    std::chrono::seconds timeout_;
    std::size_t dim_ = 0;
};

double cosine(std::span<const float> a, std::span<const float> b);

// Binary vector file: "LTVF", u32 version, u32 dimension, u64 count, then
// count*dimension little-endian float32 values, row-major.
void write_vector_file(const std::filesystem::path& path, std::size_t dimension,
                       std::span<const std::vector<float>> rows);

// Row-aligned passage ids with unit-normalized vectors.
class DenseIndex {
public:
    // `ids_path` holds one passage id per line, row-aligned with the vectors.
    static DenseIndex load(const std::filesystem::path& vectors_path, const std::filesystem::path& ids_path);
    static DenseIndex from_rows(std::vector<std::string> ids, std::size_t dimension,
                                std::span<const std::vector<float>> rows);

    std::size_t size() const { return ids_.size(); }
    std::size_t dimension() const { return dim_; }
    const std::string& id(std::size_t row) const { return ids_[row]; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }

private:
    std::vector<std::string> ids_;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

// Cosine between the embedded question and every row.
class DenseRetriever final : public Retriever {
public:
    DenseRetriever(const DenseIndex& index, EmbeddingProvider& provider) : index_(&index), provider_(&provider) {}
    std::string name() const override { return "dense"; }
    RankedList retrieve(const std::string& qid, std::string_view question, std::size_t k) const override;

private:
    const DenseIndex* index_;
    EmbeddingProvider* provider_;
};

// Normalized passage text contains the normalized answer label or an alias.
bool passage_contains_answer(const std::string& normalized_passage, const QAItem& item);

// Fraction of items with an answer-bearing passage among their top-k. Items
// without a ranked list count as misses.
std::map<std::size_t, double> recall_at_k(std::span<const QAItem> items,
                                          const std::map<std::string, RankedList>& lists, const Corpus& corpus,
                                          std::span<const std::size_t> ks);

// Highest-scored passage id; nullopt for an empty list.
std::optional<std::string> top1_context(const RankedList& list);

}  // namespace longtail
