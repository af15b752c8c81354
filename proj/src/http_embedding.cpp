#include <httplib.h>

#include "longtail/error.hpp"
#include "longtail/retrieval.hpp"

namespace longtail {

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string path, std::size_t batch_size,
                                             std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), path_(std::move(path)), batch_size_(batch_size ? batch_size : 1),
      timeout_(timeout) {
    if (base_url_.empty()) fail(ErrorKind::usage, "embedding endpoint needs a base url");
}

std::vector<std::vector<float>> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);

    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        Json body{{"texts", std::vector<std::string>(batch.begin(), batch.end())}};
        auto res = client.Post(path_, body.dump(), "application/json");
        if (!res) fail(ErrorKind::backend, "embedding request failed: " + httplib::to_string(res.error()));
        if (res->status != 200) fail(ErrorKind::backend, "embedding endpoint returned HTTP " + std::to_string(res->status));
        try {
            auto j = Json::parse(res->body);
            auto vectors = j.at("vectors").get<std::vector<std::vector<float>>>();
            if (vectors.size() != batch.size()) fail(ErrorKind::backend, "embedding endpoint returned wrong row count");
            for (auto& v : vectors) {
                if (dim_ == 0) dim_ = v.size();
                if (v.size() != dim_ || dim_ == 0) fail(ErrorKind::backend, "embedding endpoint changed dimension");
                out.push_back(std::move(v));
            }
        } catch (const Json::exception& e) {
            fail(ErrorKind::backend, std::string("malformed embedding response: ") + e.what());
        }
    }
    return out;
}

}  // namespace longtail
