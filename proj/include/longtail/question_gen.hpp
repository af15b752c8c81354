#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longtail/backend.hpp"
#include "longtail/kg.hpp"
#include "longtail/sampler.hpp"

namespace longtail {

enum class PromptMode { full_triplet, subject_property };

std::string_view to_string(PromptMode m);
PromptMode parse_prompt_mode(std::string_view s);

struct QuestionExemplar {
    std::string subject;
    std::string property;
    std::string object;
    std::string question;
};

struct PromptTemplate {
    std::string instruction = "Generate questions:";
    std::vector<QuestionExemplar> exemplars{
        {"obama", "born", "hawaii", "where was obama born?"},
        {"sky", "color", "blue", "what color is the sky?"},
    };
    PromptMode mode = PromptMode::full_triplet;
};

// "s | p | o" or "s | p", without the trailing arrow.
std::string render_slot(std::string_view subject, std::string_view property, std::string_view object,
                        PromptMode mode);

// Instruction line, one "slot => question" line per exemplar, then the target
// slot "s | p | o =>" built from lowercase catalog labels.
std::string build_prompt(const Triplet& t, const Catalog& catalog, const PromptTemplate& tpl);

struct QAItem {
    std::string qid;
    std::string question;
    std::string answer;
    std::vector<std::string> aliases;
    Triplet source;
    std::string subject_label;
    std::string bucket;
    PromptMode mode = PromptMode::full_triplet;
    std::string backend;
    std::vector<std::string> flags;
    // Set when the backend never produced a completion.
    std::optional<std::string> failure;
};

Json qa_item_to_json(const QAItem& item);
QAItem qa_item_from_json(const Json& j, const std::string& where);
std::vector<QAItem> read_dataset(const std::filesystem::path& path);

// Gold answer and aliases for a triplet, straight from the catalogs.
struct GoldAnswer {
    std::string label;
    std::vector<std::string> aliases;
};
GoldAnswer gold_answer(const Triplet& t, const Catalog& catalog);

struct GenerationOptions {
    int attempts = 3;
};

QAItem generate_question(const Candidate& candidate, std::string qid, const Catalog& catalog,
                         const PromptTemplate& tpl, CompletionBackend& backend, const GenerationOptions& opts = {});

inline constexpr std::string_view kFlagEmpty = "empty";
inline constexpr std::string_view kFlagMissingSubject = "missing_subject";
inline constexpr std::string_view kFlagAnswerLeak = "answer_leak";
inline constexpr std::string_view kFlagNoQuestionMark = "no_question_mark";

std::vector<std::string> validate_question(const QAItem& item);

struct GenerationRun {
    std::vector<QAItem> items;     // succeeded, input order
    std::vector<QAItem> failures;  // failure is set
};

// qids are "<prefix>-<index>" over the input order, zero-padded to 6 digits.
GenerationRun generate_dataset(std::span<const Candidate> candidates, const std::string& qid_prefix,
                               const Catalog& catalog, const PromptTemplate& tpl, CompletionBackend& backend,
                               const GenerationOptions& opts = {});

}  // namespace longtail
