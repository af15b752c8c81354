#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longtail/backend.hpp"
#include "longtail/question_gen.hpp"
#include "longtail/text.hpp"

namespace longtail {

// True iff normalize(prediction) equals the normalized label or any alias.
bool exact_match(std::string_view prediction, std::string_view label, std::span<const std::string> aliases);

// The gold surface form that matched, if any (label checked first).
std::optional<std::string> matching_surface(std::string_view prediction, std::string_view label,
                                            std::span<const std::string> aliases);

enum class AnswerMode { closed_book, with_context };

std::string_view to_string(AnswerMode m);
AnswerMode parse_answer_mode(std::string_view s);

struct AnswerExemplar {
    std::string question;
    std::string answer;
};

struct AnswerTemplate {
    std::string instruction = "Answer the given question:";
    std::vector<AnswerExemplar> exemplars{
        {"where was obama born?", "hawaii"},
        {"what color is the sky?", "blue"},
    };
};

// Instruction, "question => answer" exemplars, then "question =>".
std::string build_closed_book_prompt(std::string_view question, const AnswerTemplate& tpl);

// "Question: ...\nDocument: ...\nAnswer:"
std::string build_context_prompt(std::string_view question, std::string_view document);

struct ContextPassage {
    std::string id;
    std::string text;
};

struct Prediction {
    std::string qid;
    std::string prediction;
    std::optional<std::string> context_passage;
    AnswerMode mode = AnswerMode::closed_book;
    std::string backend;
    std::vector<std::string> flags;  // "no_context", "backend_failed"
};

Json prediction_to_json(const Prediction& p);
Prediction prediction_from_json(const Json& j, const std::string& where);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

using ContextLookup = std::function<std::optional<ContextPassage>(const QAItem&)>;

struct AnswerOptions {
    AnswerMode mode = AnswerMode::closed_book;
    AnswerTemplate tpl;
    int attempts = 3;
};

// One prediction per item, in input order. In with_context mode an item with
// no passage is answered closed-book and flagged "no_context".
std::vector<Prediction> answer_dataset(std::span<const QAItem> items, CompletionBackend& backend,
                                       const AnswerOptions& opts, const ContextLookup& context = {});

enum class ErrorCategory { incorrect, granularity, incorrect_question, exact_match, multiple_answers, other };

inline constexpr std::array<ErrorCategory, 6> kErrorCategories{
    ErrorCategory::incorrect,       ErrorCategory::granularity,      ErrorCategory::incorrect_question,
    ErrorCategory::exact_match,     ErrorCategory::multiple_answers, ErrorCategory::other};

std::string_view to_string(ErrorCategory c);
ErrorCategory parse_error_category(std::string_view s);

struct EvalRecord {
    std::string qid;
    std::string bucket;
    bool correct = false;
    bool missing_prediction = false;
    std::optional<std::string> matched;
    std::optional<ErrorCategory> error_category;  // only when !correct
};

struct BucketAccuracy {
    std::size_t count = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

struct AccuracyReport {
    std::string dataset;
    std::size_t item_count = 0;
    std::size_t correct_count = 0;
    std::size_t missing_predictions = 0;
    double accuracy = 0.0;
    std::map<std::string, BucketAccuracy> per_bucket;
    std::vector<EvalRecord> records;  // dataset order
    std::size_t annotated = 0;
    std::map<std::string, double> error_distribution;  // category token -> ratio over annotated misses
};

// Missing predictions count as incorrect. The result does not depend on
// the order of `predictions`.
AccuracyReport score(const std::string& dataset, std::span<const QAItem> items,
                     std::span<const Prediction> predictions);

struct ErrorAnnotation {
    std::string qid;
    ErrorCategory category;
};

std::vector<ErrorAnnotation> read_annotations(const std::filesystem::path& path);

// Attaches categories to incorrect records and recomputes the distribution.
// Unknown qids and annotations of correct items are data errors. Returns
// the number of annotations applied.
std::size_t import_error_annotations(AccuracyReport& report, std::span<const ErrorAnnotation> annotations);

// Seeded subset of incorrect qids for manual annotation, in dataset order.
std::vector<std::string> sample_misses(const AccuracyReport& report, std::size_t count, std::uint64_t seed);

Json accuracy_report_to_json(const AccuracyReport& report);

}  // namespace longtail
