#include "longtail/question_gen.hpp"

#include <cstdio>

#include "longtail/error.hpp"
#include "longtail/text.hpp"

namespace longtail {

std::string_view to_string(PromptMode m) { return m == PromptMode::full_triplet ? "full_triplet" : "subject_property"; }

PromptMode parse_prompt_mode(std::string_view s) {
    if (s == "full_triplet") return PromptMode::full_triplet;
    if (s == "subject_property") return PromptMode::subject_property;
    fail(ErrorKind::usage, "invalid prompt mode \"" + std::string(s) + "\"");
}

std::string render_slot(std::string_view subject, std::string_view property, std::string_view object,
                        PromptMode mode) {
    std::string s = std::string(subject) + " | " + std::string(property);
    if (mode == PromptMode::full_triplet) s += " | " + std::string(object);
    return s;
}

std::string build_prompt(const Triplet& t, const Catalog& catalog, const PromptTemplate& tpl) {
    const auto* subject = catalog.entity(t.subject);
    if (!subject) fail(ErrorKind::data, "no label for entity " + t.subject);
    const auto* property = catalog.property(t.property);
    if (!property) fail(ErrorKind::data, "no label for property " + t.property);
    auto object = catalog.object_surface(t);
    if (!object) fail(ErrorKind::data, "no label for entity " + t.object);

    std::string prompt = tpl.instruction + "\n";
    for (const auto& ex : tpl.exemplars) {
        prompt += render_slot(ex.subject, ex.property, ex.object, tpl.mode) + " => " + ex.question + "\n";
    }
    prompt += render_slot(to_lower(subject->label), to_lower(property->label), to_lower(*object), tpl.mode) + " =>";
    return prompt;
}

Json qa_item_to_json(const QAItem& item) {
    Json j{{"qid", item.qid},
           {"question", item.question},
           {"answer", item.answer},
           {"aliases", item.aliases},
           {"subject", item.source.subject},
           {"subject_label", item.subject_label},
           {"property", item.source.property},
           {"object", item.source.object},
           {"object_kind", std::string(to_string(item.source.object_kind))},
           {"bucket", item.bucket},
           {"template_mode", std::string(to_string(item.mode))},
           {"backend", item.backend},
           {"flags", item.flags}};
    if (item.failure) j["error"] = *item.failure;
    return j;
}

QAItem qa_item_from_json(const Json& j, const std::string& where) {
    QAItem q;
    q.qid = require_string(j, "qid", where);
    q.question = j.value("question", std::string{});
    q.answer = require_string(j, "answer", where);
    q.aliases = j.value("aliases", std::vector<std::string>{});
    q.source = triplet_from_json(j, where);
    q.subject_label = j.value("subject_label", std::string{});
    q.bucket = j.value("bucket", std::string{});
    q.mode = parse_prompt_mode(j.value("template_mode", std::string("full_triplet")));
    q.backend = j.value("backend", std::string{});
    q.flags = j.value("flags", std::vector<std::string>{});
    if (j.contains("error")) q.failure = j["error"].get<std::string>();
    return q;
}

std::vector<QAItem> read_dataset(const std::filesystem::path& path) {
    std::vector<QAItem> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t line) {
        out.push_back(qa_item_from_json(j, path.string() + ":" + std::to_string(line)));
    });
    return out;
}

GoldAnswer gold_answer(const Triplet& t, const Catalog& catalog) {
    if (t.object_kind == ObjectKind::literal) return GoldAnswer{t.object, {}};
    const auto* e = catalog.entity(t.object);
    if (!e) fail(ErrorKind::data, "no label for entity " + t.object);
    return GoldAnswer{e->label, e->aliases};
}

QAItem generate_question(const Candidate& candidate, std::string qid, const Catalog& catalog,
                         const PromptTemplate& tpl, CompletionBackend& backend, const GenerationOptions& opts) {
    QAItem item;
    item.qid = std::move(qid);
    item.source = candidate.triplet;
    item.bucket = candidate.bucket;
    item.mode = tpl.mode;
    item.backend = backend.name();

    auto gold = gold_answer(candidate.triplet, catalog);
    item.answer = std::move(gold.label);
    item.aliases = std::move(gold.aliases);
    if (const auto* s = catalog.entity(candidate.triplet.subject)) item.subject_label = s->label;

    auto prompt = build_prompt(candidate.triplet, catalog, tpl);
    auto outcome = complete_with_retry(backend, CompletionRequest{prompt, item.qid}, opts.attempts);
    if (!outcome.text) {
        item.failure = outcome.error.empty() ? "backend failure" : outcome.error;
        return item;
    }
    item.question = first_line(*outcome.text);
    item.flags = validate_question(item);
    return item;
}

std::vector<std::string> validate_question(const QAItem& item) {
    std::vector<std::string> flags;
    auto q = std::string(trim(item.question));
    if (q.empty()) {
        flags.emplace_back(kFlagEmpty);
        return flags;
    }
    auto norm_q = normalize(q);

    std::vector<std::string> subject_words;
    for (auto& w : split(normalize(item.subject_label), ' ')) {
        if (!w.empty() && w != "a" && w != "an" && w != "the") subject_words.push_back(std::move(w));
    }
    if (!subject_words.empty()) {
        bool any = false;
        for (const auto& w : subject_words) any = any || contains_words(norm_q, w);
        if (!any) flags.emplace_back(kFlagMissingSubject);
    }

    if (contains_words(norm_q, normalize(item.answer))) flags.emplace_back(kFlagAnswerLeak);
    if (q.back() != '?') flags.emplace_back(kFlagNoQuestionMark);
    return flags;
}

GenerationRun generate_dataset(std::span<const Candidate> candidates, const std::string& qid_prefix,
                               const Catalog& catalog, const PromptTemplate& tpl, CompletionBackend& backend,
                               const GenerationOptions& opts) {
    // Labels are checked up front so a data error is not mistaken for a
    // backend failure inside the worker threads.
    for (const auto& c : candidates) build_prompt(c.triplet, catalog, tpl), gold_answer(c.triplet, catalog);

    auto items = ordered_parallel_map(candidates.size(), backend.max_in_flight(), [&](std::size_t i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%06zu", i + 1);
        return generate_question(candidates[i], qid_prefix + "-" + buf, catalog, tpl, backend, opts);
    });

    GenerationRun run;
    for (auto& item : items) (item.failure ? run.failures : run.items).push_back(std::move(item));
    return run;
}

}  // namespace longtail
