#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "longtail/property_filter.hpp"
#include "longtail/sampler.hpp"

namespace longtail {

// Raised by TriageService for request-level problems; `status` is the HTTP
// status the server answers with.
class TriageError : public std::runtime_error {
public:
    TriageError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct TriageOptions {
    std::size_t page_size = 20;
    std::size_t card_samples = 5;
    std::size_t screen_sample_size = 20;
    std::uint64_t seed = 0;
    bool auto_apply_heuristics = false;
    HeuristicConfig heuristics;
};

struct TriageSample {
    std::string subject;
    std::string property;
    std::string object;
};

// Everything the curator sees for one property. Samples and previews are
// fixed at load; verdict fields are filled in per request.
struct TriageCard {
    std::string property_id;
    std::string label;
    std::size_t triplet_count = 0;
    ScreenResult heuristic;
    std::vector<TriageSample> samples;
    std::vector<std::string> preview_questions;
};

// Property triage over the candidate triplets. A property is pending until a
// human verdict exists; kept / rejected follow the last human verdict.
// Thread-safe: reads run concurrently, decisions are serialized.
class TriageService {
public:
    TriageService(Catalog catalog, std::span<const Candidate> candidates, std::filesystem::path ledger_path,
                  TriageOptions options = {});

    // status is pending | kept | rejected | all; page is 1-based.
    Json list(const std::string& status, std::size_t page, std::optional<std::size_t> page_size = {}) const;
    Json decide(const std::string& property_id, const std::string& verdict, const std::string& reason);
    Json card(const std::string& property_id) const;
    Json stats() const;

    const std::filesystem::path& ledger_path() const { return ledger_.path(); }

private:
    std::string status_of(const std::string& property_id) const;
    Json card_json(const TriageCard& c) const;

    Catalog catalog_;
    TriageOptions options_;
    std::vector<TriageCard> cards_;  // untriaged-first order is computed per request
    std::map<std::string, std::size_t> index_;
    LedgerWriter ledger_;
    mutable std::shared_mutex mu_;
    FilterLedger snapshot_;
};

// HTTP front end: the /api routes plus static UI assets at "/".
class TriageServer {
public:
    TriageServer(TriageService& service, std::filesystem::path static_dir = {});
    ~TriageServer();
    TriageServer(const TriageServer&) = delete;
    TriageServer& operator=(const TriageServer&) = delete;

    // Port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace longtail
