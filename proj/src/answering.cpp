#include "longtail/answering.hpp"

#include <algorithm>
#include <unordered_map>

#include "longtail/error.hpp"
#include "longtail/random.hpp"

namespace longtail {

std::optional<std::string> matching_surface(std::string_view prediction, std::string_view label,
                                            std::span<const std::string> aliases) {
    const auto pred = normalize(prediction);
    if (pred == normalize(label)) return std::string(label);
    for (const auto& a : aliases) {
        if (pred == normalize(a)) return a;
    }
    return std::nullopt;
}

bool exact_match(std::string_view prediction, std::string_view label, std::span<const std::string> aliases) {
    return matching_surface(prediction, label, aliases).has_value();
}

std::string_view to_string(AnswerMode m) { return m == AnswerMode::closed_book ? "closed_book" : "with_context"; }

AnswerMode parse_answer_mode(std::string_view s) {
    if (s == "closed_book") return AnswerMode::closed_book;
    if (s == "with_context") return AnswerMode::with_context;
    fail(ErrorKind::usage, "invalid answer mode \"" + std::string(s) + "\"");
}

std::string build_closed_book_prompt(std::string_view question, const AnswerTemplate& tpl) {
    std::string prompt = tpl.instruction + "\n";
    for (const auto& ex : tpl.exemplars) prompt += ex.question + " => " + ex.answer + "\n";
    prompt += std::string(trim(question)) + " =>";
    return prompt;
}

std::string build_context_prompt(std::string_view question, std::string_view document) {
    return "Question: " + std::string(trim(question)) + "\nDocument: " + std::string(trim(document)) + "\nAnswer:";
}

Json prediction_to_json(const Prediction& p) {
    return Json{{"qid", p.qid},
                {"prediction", p.prediction},
                {"context_passage", p.context_passage ? Json(*p.context_passage) : Json(nullptr)},
                {"mode", std::string(to_string(p.mode))},
                {"backend", p.backend},
                {"flags", p.flags}};
}

Prediction prediction_from_json(const Json& j, const std::string& where) {
    Prediction p;
    p.qid = require_string(j, "qid", where);
    p.prediction = require_string(j, "prediction", where);
    if (auto it = j.find("context_passage"); it != j.end() && it->is_string()) p.context_passage = it->get<std::string>();
    p.mode = parse_answer_mode(j.value("mode", std::string("closed_book")));
    p.backend = j.value("backend", std::string{});
    p.flags = j.value("flags", std::vector<std::string>{});
    return p;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    std::vector<Prediction> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        out.push_back(prediction_from_json(j, path.string() + ":" + std::to_string(line)));
    });
    return out;
}

std::vector<Prediction> answer_dataset(std::span<const QAItem> items, CompletionBackend& backend,
                                       const AnswerOptions& opts, const ContextLookup& context) {
    // Context lookups happen up front; only the backend calls run in parallel.
    std::vector<std::optional<ContextPassage>> passages(items.size());
    if (opts.mode == AnswerMode::with_context && context) {
        for (std::size_t i = 0; i < items.size(); ++i) passages[i] = context(items[i]);
    }

    return ordered_parallel_map(items.size(), backend.max_in_flight(), [&](std::size_t i) {
        const auto& item = items[i];
        Prediction p;
        p.qid = item.qid;
        p.backend = backend.name();
        std::string prompt;
        if (opts.mode == AnswerMode::with_context && passages[i]) {
            p.mode = AnswerMode::with_context;
            p.context_passage = passages[i]->id;
            prompt = build_context_prompt(item.question, passages[i]->text);
        } else {
            p.mode = AnswerMode::closed_book;
            if (opts.mode == AnswerMode::with_context) p.flags.emplace_back("no_context");
            prompt = build_closed_book_prompt(item.question, opts.tpl);
        }
        auto outcome = complete_with_retry(backend, CompletionRequest{prompt, item.qid}, opts.attempts);
        if (outcome.text) {
            p.prediction = first_line(*outcome.text);
        } else {
            p.flags.emplace_back("backend_failed");
        }
        return p;
    });
}

std::string_view to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::incorrect: return "incorrect";
        case ErrorCategory::granularity: return "granularity";
        case ErrorCategory::incorrect_question: return "incorrect_question";
        case ErrorCategory::exact_match: return "exact_match";
        case ErrorCategory::multiple_answers: return "multiple_answers";
        case ErrorCategory::other: return "other";
    }
    return "other";
}

ErrorCategory parse_error_category(std::string_view s) {
    for (auto c : kErrorCategories) {
        if (to_string(c) == s) return c;
    }
    fail(ErrorKind::data, "unknown error category \"" + std::string(s) + "\"");
}

AccuracyReport score(const std::string& dataset, std::span<const QAItem> items,
                     std::span<const Prediction> predictions) {
    std::unordered_map<std::string, const Prediction*> by_qid;
    for (const auto& p : predictions) by_qid[p.qid] = &p;

    AccuracyReport r;
    r.dataset = dataset;
    r.item_count = items.size();
    for (const auto& item : items) {
        EvalRecord rec;
        rec.qid = item.qid;
        rec.bucket = item.bucket;
        auto it = by_qid.find(item.qid);
        if (it == by_qid.end()) {
            rec.missing_prediction = true;
            ++r.missing_predictions;
        } else {
            rec.matched = matching_surface(it->second->prediction, item.answer, item.aliases);
            rec.correct = rec.matched.has_value();
        }
        auto& b = r.per_bucket[item.bucket];
        ++b.count;
        if (rec.correct) ++b.correct, ++r.correct_count;
        r.records.push_back(std::move(rec));
    }
    r.accuracy = r.item_count ? static_cast<double>(r.correct_count) / static_cast<double>(r.item_count) : 0.0;
    for (auto& [name, b] : r.per_bucket) {
        b.accuracy = b.count ? static_cast<double>(b.correct) / static_cast<double>(b.count) : 0.0;
    }
    return r;
}

std::vector<ErrorAnnotation> read_annotations(const std::filesystem::path& path) {
    std::vector<ErrorAnnotation> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        auto where = path.string() + ":" + std::to_string(line);
        out.push_back(ErrorAnnotation{require_string(j, "qid", where),
                                      parse_error_category(require_string(j, "category", where))});
    });
    return out;
}

std::size_t import_error_annotations(AccuracyReport& report, std::span<const ErrorAnnotation> annotations) {
    std::unordered_map<std::string, EvalRecord*> by_qid;
    for (auto& rec : report.records) by_qid[rec.qid] = &rec;

    for (const auto& a : annotations) {
        auto it = by_qid.find(a.qid);
        if (it == by_qid.end()) fail(ErrorKind::data, "annotation for unknown qid " + a.qid);
        if (it->second->correct) fail(ErrorKind::data, "annotation for correctly answered qid " + a.qid);
    }
    for (const auto& a : annotations) by_qid[a.qid]->error_category = a.category;

    std::map<std::string, std::size_t> counts;
    report.annotated = 0;
    for (const auto& rec : report.records) {
        if (!rec.error_category) continue;
        ++report.annotated;
        ++counts[std::string(to_string(*rec.error_category))];
    }
    report.error_distribution.clear();
    for (const auto& [cat, n] : counts) {
        report.error_distribution[cat] = static_cast<double>(n) / static_cast<double>(report.annotated);
    }
    return annotations.size();
}

std::vector<std::string> sample_misses(const AccuracyReport& report, std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> misses;
    for (std::size_t i = 0; i < report.records.size(); ++i) {
        if (!report.records[i].correct) misses.push_back(i);
    }
    SeededRng rng(seed);
    auto picks = rng.sample_indices(misses.size(), count);
    std::sort(picks.begin(), picks.end());
    std::vector<std::string> out;
    for (auto k : picks) out.push_back(report.records[misses[k]].qid);
    return out;
}

Json accuracy_report_to_json(const AccuracyReport& r) {
    Json buckets = Json::object();
    for (const auto& [name, b] : r.per_bucket) {
        buckets[name] = Json{{"count", b.count}, {"correct", b.correct}, {"accuracy", b.accuracy}};
    }
    Json dist = Json::object();
    for (auto c : kErrorCategories) {
        auto key = std::string(to_string(c));
        auto it = r.error_distribution.find(key);
        dist[key] = it == r.error_distribution.end() ? 0.0 : it->second;
    }
    return Json{{"dataset", r.dataset},
                {"item_count", r.item_count},
                {"correct", r.correct_count},
                {"missing_predictions", r.missing_predictions},
                {"accuracy", r.accuracy},
                {"per_bucket", buckets},
                {"annotated_misses", r.annotated},
                {"error_distribution", r.annotated ? dist : Json::object()}};
}

}  // namespace longtail
