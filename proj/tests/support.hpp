#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "longtail/kg.hpp"
#include "longtail/sampler.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "longtail-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

inline longtail::Triplet ent(std::string s, std::string p, std::string o) {
    return {std::move(s), std::move(p), std::move(o), longtail::ObjectKind::entity};
}

inline longtail::Triplet lit(std::string s, std::string p, std::string o) {
    return {std::move(s), std::move(p), std::move(o), longtail::ObjectKind::literal};
}

// Random triplets over entities E0..E{n-1} and properties P0..P{props-1};
// duplicates are possible on purpose.
inline std::vector<longtail::Triplet> random_triplets(std::mt19937_64& rng, std::size_t entities, std::size_t count,
                                                      std::size_t props, double literal_share = 0.1) {
    std::uniform_int_distribution<std::size_t> e(0, entities - 1);
    std::uniform_int_distribution<std::size_t> p(0, props - 1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<longtail::Triplet> out;
    for (std::size_t i = 0; i < count; ++i) {
        auto s = "E" + std::to_string(e(rng));
        auto prop = "P" + std::to_string(p(rng));
        if (u(rng) < literal_share) {
            out.push_back(lit(s, prop, "v" + std::to_string(e(rng) % 17)));
        } else {
            out.push_back(ent(s, prop, "E" + std::to_string(e(rng))));
        }
    }
    return out;
}

// Subject degrees drawn from a truncated power law, so both the head and the
// tail buckets are populated.
inline std::vector<longtail::Triplet> zipf_triplets(std::mt19937_64& rng, std::size_t entities,
                                                    std::size_t max_degree = 150, double s = 1.6) {
    std::vector<double> w;
    for (std::size_t k = 1; k <= max_degree; ++k) w.push_back(std::pow(static_cast<double>(k), -s));
    std::discrete_distribution<std::size_t> deg(w.begin(), w.end());
    std::uniform_int_distribution<std::size_t> other(0, entities - 1);
    std::vector<longtail::Triplet> out;
    for (std::size_t i = 0; i < entities; ++i) {
        const auto d = deg(rng) + 1;
        for (std::size_t j = 0; j < d; ++j) {
            // (property, object) pairs are distinct per subject by construction.
            out.push_back(ent("E" + std::to_string(i), "P" + std::to_string(j % 13),
                              "O" + std::to_string(j) + "_" + std::to_string(other(rng))));
        }
    }
    return out;
}

inline std::string to_tsv(const std::vector<longtail::Triplet>& ts) {
    std::string s;
    for (const auto& t : ts) {
        s += t.subject + "\t" + t.property + "\t" + t.object + "\t" + std::string(longtail::to_string(t.object_kind)) +
             "\n";
    }
    return s;
}

inline std::vector<longtail::Candidate> random_candidates(std::mt19937_64& rng, std::size_t count, std::size_t props,
                                                          const std::string& bucket) {
    std::uniform_int_distribution<std::size_t> p(0, props - 1);
    std::uniform_int_distribution<std::size_t> o(0, 1'000'000);
    std::vector<longtail::Candidate> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({ent(bucket + "S" + std::to_string(i), "P" + std::to_string(p(rng)), "O" + std::to_string(o(rng))),
                       bucket});
    }
    return out;
}

}  // namespace testing
