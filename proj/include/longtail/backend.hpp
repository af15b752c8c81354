#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace longtail {

struct CompletionRequest {
    std::string prompt;
    // Caller-side key (qid or triplet key). Live backends ignore it.
    std::string tag;
};

// Text-completion service. Implementations throw Error(ErrorKind::backend)
// on failure. complete() may be called from up to max_in_flight() threads.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual std::string name() const = 0;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::size_t max_in_flight() const { return 1; }
};

// Offline question generator: reads the target slot "x | y | z =>" (or
// "x | y =>") on the last prompt line and answers "what is the y of x?".
class MockQuestionBackend final : public CompletionBackend {
public:
    std::string name() const override { return "mock"; }
    std::string complete(const CompletionRequest& request) override;
};

// Answering double that returns the gold answer registered for the tag.
class EchoGoldBackend final : public CompletionBackend {
public:
    explicit EchoGoldBackend(std::map<std::string, std::string> gold_by_tag) : gold_(std::move(gold_by_tag)) {}
    std::string name() const override { return "echo_gold"; }
    std::string complete(const CompletionRequest& request) override;

private:
    std::map<std::string, std::string> gold_;
};

// Wire description of a text-completion endpoint.
struct HttpProfile {
    std::string name = "http";
    std::string base_url;                    // scheme://host[:port]
    std::string path = "/v1/completions";
    std::string model;
    std::string api_key_env;                 // env var holding a bearer token
    std::string prompt_field = "prompt";
    std::string model_field = "model";
    std::string response_pointer = "/choices/0/text";  // JSON pointer into the response
    // Decoding defaults are local assumptions, not published settings.
    double temperature = 0.0;
    int max_tokens = 64;
    std::chrono::seconds timeout{30};
    std::size_t max_in_flight = 4;
};

// INI file with a [backend] section whose keys mirror HttpProfile.
HttpProfile load_http_profile(const std::filesystem::path& path);

class HttpCompletionBackend final : public CompletionBackend {
public:
    explicit HttpCompletionBackend(HttpProfile profile);
    std::string name() const override { return profile_.name; }
    std::string complete(const CompletionRequest& request) override;
    std::size_t max_in_flight() const override { return profile_.max_in_flight; }

private:
    HttpProfile profile_;
};

struct CompletionOutcome {
    std::optional<std::string> text;  // nullopt when every attempt failed
    std::string error;
    int attempts = 0;
};

CompletionOutcome complete_with_retry(CompletionBackend& backend, const CompletionRequest& request, int attempts);

// First line of a completion, trimmed.
std::string first_line(std::string_view completion);

// Runs fn(i) for i in [0, n) on at most `budget` threads; results come back
// in index order regardless of completion order. fn must not throw.
template <class Fn>
auto ordered_parallel_map(std::size_t n, std::size_t budget, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    if (budget <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i));
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> workers;
        const auto threads = std::min(budget, n);
        for (std::size_t w = 0; w < threads; ++w) {
            workers.emplace_back([&] {
                for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) slots[i].emplace(fn(i));
            });
        }
    }
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace longtail
