#include "longtail/backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "longtail/error.hpp"
#include "longtail/ini.hpp"
#include "longtail/text.hpp"

namespace longtail {

namespace {

std::string last_nonblank_line(std::string_view prompt) {
    auto lines = split(prompt, '\n');
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (!trim(*it).empty()) return std::string(trim(*it));
    }
    return {};
}

}  // namespace

std::string MockQuestionBackend::complete(const CompletionRequest& request) {
    auto slot = last_nonblank_line(request.prompt);
    if (!slot.ends_with("=>")) fail(ErrorKind::backend, "mock generator: prompt has no target slot");
    slot.resize(slot.size() - 2);
    auto parts = split(slot, '|');
    if (parts.size() < 2) fail(ErrorKind::backend, "mock generator: target slot needs subject and property");
    auto subject = std::string(trim(parts[0]));
    auto property = std::string(trim(parts[1]));
    return to_lower("what is the " + property + " of " + subject + "?");
}

std::string EchoGoldBackend::complete(const CompletionRequest& request) {
    auto it = gold_.find(request.tag);
    if (it == gold_.end()) fail(ErrorKind::backend, "echo_gold: no gold answer for " + request.tag);
    return it->second;
}

HttpProfile load_http_profile(const std::filesystem::path& path) {
    auto ini = load_ini(path);
    HttpProfile p;
    auto get = [&](const char* key) { return ini_get(ini, std::string("backend.") + key); };
    try {
        if (auto v = get("name")) p.name = *v;
        if (auto v = get("base_url")) p.base_url = *v;
        if (auto v = get("path")) p.path = *v;
        if (auto v = get("model")) p.model = *v;
        if (auto v = get("api_key_env")) p.api_key_env = *v;
        if (auto v = get("prompt_field")) p.prompt_field = *v;
        if (auto v = get("model_field")) p.model_field = *v;
        if (auto v = get("response_pointer")) p.response_pointer = *v;
        if (auto v = get("temperature")) p.temperature = std::stod(*v);
        if (auto v = get("max_tokens")) p.max_tokens = std::stoi(*v);
        if (auto v = get("timeout_s")) p.timeout = std::chrono::seconds(std::stol(*v));
        if (auto v = get("max_in_flight")) p.max_in_flight = std::stoul(*v);
    } catch (const std::logic_error&) {
        fail(ErrorKind::usage, "invalid numeric value in backend profile " + path.string());
    }
    if (p.base_url.empty()) fail(ErrorKind::usage, "backend profile " + path.string() + " has no base_url");
    if (p.max_in_flight == 0) p.max_in_flight = 1;
    return p;
}

HttpCompletionBackend::HttpCompletionBackend(HttpProfile profile) : profile_(std::move(profile)) {
    if (profile_.base_url.empty()) fail(ErrorKind::usage, "http backend needs a base_url");
}

std::string HttpCompletionBackend::complete(const CompletionRequest& request) {
    httplib::Client client(profile_.base_url);
    client.set_connection_timeout(profile_.timeout);
    client.set_read_timeout(profile_.timeout);
    client.set_write_timeout(profile_.timeout);

    httplib::Headers headers;
    if (!profile_.api_key_env.empty()) {
        if (const char* key = std::getenv(profile_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    nlohmann::json body;
    body[profile_.prompt_field] = request.prompt;
    if (!profile_.model.empty()) body[profile_.model_field] = profile_.model;
    body["temperature"] = profile_.temperature;
    body["max_tokens"] = profile_.max_tokens;

    auto res = client.Post(profile_.path, headers, body.dump(), "application/json");
    if (!res) fail(ErrorKind::backend, profile_.name + ": request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        fail(ErrorKind::backend, profile_.name + ": HTTP " + std::to_string(res->status));
    }
    try {
        auto j = nlohmann::json::parse(res->body);
        const auto& v = j.at(nlohmann::json::json_pointer(profile_.response_pointer));
        if (!v.is_string()) fail(ErrorKind::backend, profile_.name + ": response field is not a string");
        return v.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::backend, profile_.name + ": malformed response: " + e.what());
    }
}

CompletionOutcome complete_with_retry(CompletionBackend& backend, const CompletionRequest& request, int attempts) {
    CompletionOutcome out;
    for (int i = 0; i < std::max(1, attempts); ++i) {
        ++out.attempts;
        try {
            out.text = backend.complete(request);
            out.error.clear();
            return out;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
    }
    return out;
}

std::string first_line(std::string_view completion) {
    auto s = trim(completion);
    auto nl = s.find('\n');
    return std::string(trim(s.substr(0, nl)));
}

}  // namespace longtail
