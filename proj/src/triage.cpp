#include "longtail/triage.hpp"

#include <algorithm>

#include <httplib.h>

#include "longtail/backend.hpp"
#include "longtail/error.hpp"
#include "longtail/question_gen.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace fs = std::filesystem;

TriageService::TriageService(Catalog catalog, std::span<const Candidate> candidates, fs::path ledger_path,
                             TriageOptions options)
    : catalog_(std::move(catalog)), options_(std::move(options)), ledger_(std::move(ledger_path)) {
    std::map<std::string, std::vector<Triplet>> groups;
    for (const auto& c : candidates) groups[c.triplet.property].push_back(c.triplet);

    MockQuestionBackend mock;
    PromptTemplate tpl;
    for (auto& [pid, triplets] : groups) {
        std::sort(triplets.begin(), triplets.end());
        triplets.erase(std::unique(triplets.begin(), triplets.end()), triplets.end());

        TriageCard card;
        card.property_id = pid;
        const auto* prop = catalog_.property(pid);
        card.label = prop ? prop->label : pid;
        card.triplet_count = triplets.size();
        auto sample = draw_screen_sample(triplets, options_.screen_sample_size, options_.seed, pid);
        card.heuristic = heuristic_screen(Property{pid, card.label}, sample, catalog_, options_.heuristics);

        for (std::size_t i = 0; i < sample.size() && card.samples.size() < options_.card_samples; ++i) {
            const auto& t = sample[i];
            const auto* s = catalog_.entity(t.subject);
            auto o = catalog_.object_surface(t);
            card.samples.push_back(TriageSample{s ? s->label : t.subject, card.label, o ? *o : t.object});
            if (s && prop && o) {
                auto prompt = build_prompt(t, catalog_, tpl);
                card.preview_questions.push_back(first_line(mock.complete(CompletionRequest{prompt, pid})));
            }
        }
        index_.emplace(pid, cards_.size());
        cards_.push_back(std::move(card));
    }
    snapshot_ = ledger_.snapshot();
}

std::string TriageService::status_of(const std::string& property_id) const {
    auto v = snapshot_.last_human(property_id);
    if (!v) return "pending";
    return v->kind == VerdictKind::keep ? "kept" : "rejected";
}

Json TriageService::card_json(const TriageCard& c) const {
    Json samples = Json::array();
    for (const auto& s : c.samples) samples.push_back(Json{{"subject", s.subject}, {"property", s.property}, {"object", s.object}});
    auto effective = snapshot_.effective(c.property_id, options_.auto_apply_heuristics);
    Json eff = nullptr;
    if (effective) {
        eff = Json{{"verdict", std::string(to_string(effective->kind))},
                   {"reason", effective->reason},
                   {"source", std::string(to_string(effective->source))}};
    }
    return Json{{"property_id", c.property_id},
                {"label", c.label},
                {"triplet_count", c.triplet_count},
                {"heuristic",
                 {{"suggestion", std::string(to_string(c.heuristic.suggestion.kind))},
                  {"reason", c.heuristic.suggestion.reason},
                  {"fired_rules", c.heuristic.fired_rules}}},
                {"samples", samples},
                {"preview_questions", c.preview_questions},
                {"status", status_of(c.property_id)},
                {"effective_verdict", eff}};
}

Json TriageService::list(const std::string& status, std::size_t page, std::optional<std::size_t> page_size) const {
    if (status != "pending" && status != "kept" && status != "rejected" && status != "all") {
        throw TriageError(400, "status must be pending, kept, rejected or all");
    }
    if (page == 0) throw TriageError(400, "page is 1-based");
    const auto size = page_size.value_or(options_.page_size);
    if (size == 0) throw TriageError(400, "page_size must be positive");

    std::shared_lock lock(mu_);
    std::vector<const TriageCard*> selected;
    for (const auto& c : cards_) {
        if (status == "all" || status_of(c.property_id) == status) selected.push_back(&c);
    }
    std::sort(selected.begin(), selected.end(), [&](const TriageCard* a, const TriageCard* b) {
        const bool pa = status_of(a->property_id) == "pending";
        const bool pb = status_of(b->property_id) == "pending";
        if (pa != pb) return pa;
        if (a->triplet_count != b->triplet_count) return a->triplet_count > b->triplet_count;
        return a->property_id < b->property_id;
    });

    Json items = Json::array();
    const auto begin = (page - 1) * size;
    for (auto i = begin; i < selected.size() && i < begin + size; ++i) items.push_back(card_json(*selected[i]));
    return Json{{"status", status},
                {"page", page},
                {"page_size", size},
                {"total", selected.size()},
                {"pages", (selected.size() + size - 1) / size},
                {"items", items}};
}

Json TriageService::card(const std::string& property_id) const {
    std::shared_lock lock(mu_);
    auto it = index_.find(property_id);
    if (it == index_.end()) throw TriageError(404, "unknown property " + property_id);
    return card_json(cards_[it->second]);
}

Json TriageService::decide(const std::string& property_id, const std::string& verdict, const std::string& reason) {
    std::unique_lock lock(mu_);
    auto it = index_.find(property_id);
    if (it == index_.end()) throw TriageError(404, "unknown property " + property_id);
    if (verdict != "keep" && verdict != "reject") throw TriageError(400, "verdict must be keep or reject");
    Verdict v{parse_verdict_kind(verdict), reason, VerdictSource::human};
    if (v.kind == VerdictKind::reject && trim(reason).empty()) throw TriageError(422, "reject needs a reason");
    try {
        ledger_.record(catalog_, property_id, v);
    } catch (const Error& e) {
        throw TriageError(e.kind() == ErrorKind::not_found ? 404 : 500, e.what());
    }
    snapshot_ = ledger_.snapshot();
    return card_json(cards_[it->second]);
}

Json TriageService::stats() const {
    std::shared_lock lock(mu_);
    std::map<std::string, std::size_t> props{{"pending", 0}, {"kept", 0}, {"rejected", 0}};
    std::map<std::string, std::size_t> triplets{{"pending", 0}, {"kept", 0}, {"rejected", 0}};
    for (const auto& c : cards_) {
        auto s = status_of(c.property_id);
        ++props[s];
        triplets[s] += c.triplet_count;
    }
    return Json{{"total", cards_.size()},
                {"pending", props["pending"]},
                {"kept", props["kept"]},
                {"rejected", props["rejected"]},
                {"triplets", triplets}};
}

// ---------------------------------------------------------------------------
// HTTP

struct TriageServer::Impl {
    TriageService* service;
    httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

template <class Fn>
void guarded(httplib::Response& res, Fn fn) {
    try {
        send_json(res, 200, fn());
    } catch (const TriageError& e) {
        send_json(res, e.status(), Json{{"error", e.what()}});
    } catch (const Json::exception& e) {
        send_json(res, 400, Json{{"error", std::string("bad request body: ") + e.what()}});
    } catch (const std::exception& e) {
        send_json(res, 500, Json{{"error", e.what()}});
    }
}

std::size_t parse_positive(const std::string& s, const char* name) {
    try {
        std::size_t pos = 0;
        auto n = std::stoul(s, &pos);
        if (pos == s.size() && n > 0) return n;
    } catch (const std::logic_error&) {
    }
    throw TriageError(400, std::string(name) + " must be a positive integer");
}

}  // namespace

TriageServer::TriageServer(TriageService& service, fs::path static_dir) : impl_(std::make_unique<Impl>()) {
    impl_->service = &service;
    auto& svr = impl_->server;

    svr.Get("/api/properties", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto status = req.has_param("status") ? req.get_param_value("status") : std::string("pending");
            std::size_t page = req.has_param("page") ? parse_positive(req.get_param_value("page"), "page") : 1;
            std::optional<std::size_t> size;
            if (req.has_param("page_size")) size = parse_positive(req.get_param_value("page_size"), "page_size");
            return impl_->service->list(status, page, size);
        });
    });
    svr.Get(R"(/api/properties/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { return impl_->service->card(req.matches[1]); });
    });
    svr.Post(R"(/api/properties/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto body = Json::parse(req.body);
            if (!body.is_object()) throw TriageError(400, "body must be a JSON object");
            return impl_->service->decide(req.matches[1], body.value("verdict", std::string{}),
                                          body.value("reason", std::string{}));
        });
    });
    svr.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { return impl_->service->stats(); });
    });

    if (!static_dir.empty() && fs::is_directory(static_dir)) {
        svr.set_mount_point("/", static_dir.string());
    } else {
        svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("triage UI assets not installed; the JSON API is under /api\n", "text/plain");
        });
    }
}

TriageServer::~TriageServer() { stop(); }

int TriageServer::bind(const std::string& host, int port) {
    auto& svr = impl_->server;
    int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
    if (bound < 0) fail(ErrorKind::usage, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void TriageServer::listen() { impl_->server.listen_after_bind(); }

void TriageServer::stop() {
    if (impl_) impl_->server.stop();
}

}  // namespace longtail
