#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace volterra {

/// Fixed chunk count for deterministic parallel reductions. Work is always
/// split into the same chunks regardless of worker count; partial results
/// are combined in chunk order, so numeric output does not depend on
/// scheduling.
inline constexpr std::size_t kReductionChunks = 64;

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(begin, end, chunk_index) over [0, n) split into n_chunks
/// contiguous ranges. With workers <= 1 everything runs inline.
/// Chunk boundaries depend only on (n, n_chunks), never on workers.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t n_chunks, unsigned workers, Fn&& fn) {
    if (n == 0) return;
    if (n_chunks == 0) n_chunks = 1;
    if (n_chunks > n) n_chunks = n;
    const std::size_t base = n / n_chunks;
    const std::size_t rem = n % n_chunks;
    auto chunk_range = [&](std::size_t c) {
        const std::size_t b = c * base + (c < rem ? c : rem);
        const std::size_t e = b + base + (c < rem ? 1 : 0);
        return std::pair<std::size_t, std::size_t>(b, e);
    };
    workers = resolve_workers(workers);
    if (workers <= 1 || n_chunks == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_range(c);
            fn(b, e, c);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        try {
            for (;;) {
                const std::size_t c = next.fetch_add(1);
                if (c >= n_chunks) break;
                auto [b, e] = chunk_range(c);
                fn(b, e, c);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const unsigned spawn = static_cast<unsigned>(
        std::min<std::size_t>(workers, n_chunks));
    pool.reserve(spawn - 1);
    for (unsigned t = 0; t + 1 < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Plain parallel loop over [0, n) with no reduction.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    parallel_chunks(n, kReductionChunks, workers,
                    [&](std::size_t b, std::size_t e, std::size_t) {
                        for (std::size_t i = b; i < e; ++i) fn(i);
                    });
}

} // namespace volterra
