#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

#include "gnnprune/common.hpp"

namespace gnnprune {

/// Deterministic counter-based RNG (splitmix64). Distributions are
/// hand-rolled so streams do not depend on the standard library's
/// implementation-defined distribution algorithms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    /// Derive an independent substream from a root seed and a stream name,
    /// so pipeline stages (train/prune/plan) can be re-run independently.
    static Rng substream(std::uint64_t root_seed, std::string_view name) {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a
        for (char c : name) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 1099511628211ull;
        }
        return Rng(root_seed ^ h);
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // rejection sampling to avoid modulo bias
        std::uint64_t limit = n * ((~0ull) / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// k distinct values from [0, n), ascending order (partial Fisher-Yates).
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        require(k <= n, "sample_without_replacement: k > n");
        std::vector<std::uint32_t> pool(n);
        for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
        for (std::uint32_t i = 0; i < k; ++i) {
            std::uint32_t j = i + static_cast<std::uint32_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::uint64_t state_;
};

} // namespace gnnprune
