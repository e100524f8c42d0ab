#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gnnprune {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (shape mismatch etc.).
struct ContractViolation : Error {
    using Error::Error;
};

/// A file could not be decoded.
struct ParseError : Error {
    using Error::Error;
};

/// An invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractViolation(msg);
}

/// Worker count, capped by the GNNPRUNE_THREADS env var. Defaults to 1;
/// results are identical for any count (fixed per-row reduction order).
inline int worker_count() {
    if (const char* env = std::getenv("GNNPRUNE_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

/// Row-parallel loop. Each index is processed independently; the chunking
/// never changes per-index results, so output is identical for any worker
/// count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
    int workers = worker_count();
    if (workers <= 1 || n < 2048) {
        body(0, n);
        return;
    }
    std::size_t chunk = (n + workers - 1) / static_cast<std::size_t>(workers);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = static_cast<std::size_t>(w) * chunk;
        if (lo >= n) break;
        std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

/// Global multiply-accumulate tally. Kernels add their exact MAC count
/// once per call, so the tally is identical for any worker count.
struct MacCounter {
    static std::atomic<std::uint64_t>& tally() {
        static std::atomic<std::uint64_t> count{0};
        return count;
    }
    static void add(std::uint64_t macs) { tally().fetch_add(macs, std::memory_order_relaxed); }
    static void reset() { tally().store(0, std::memory_order_relaxed); }
    static std::uint64_t value() { return tally().load(std::memory_order_relaxed); }
};

} // namespace gnnprune
