#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace longtail {

// Seeded generator with distribution code that does not depend on the
// standard library implementation, so samples are identical across
// toolchains. std::uniform_int_distribution makes no such promise.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    // Uniform double in [0, 1).
    double unit();

    // k distinct indices from [0, n), uniformly, via partial Fisher-Yates.
    // Returned in selection order; k is clamped to n.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

// Derive an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

}  // namespace longtail
