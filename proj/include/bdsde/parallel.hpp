#pragma once

#include <algorithm>
#include <cstdlib>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

namespace bdsde {

/// Number of worker threads: hardware concurrency, capped by the
/// BDSDE_LAB_THREADS environment variable when set.
inline std::size_t worker_count() {
    static const std::size_t n = [] {
        std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("BDSDE_LAB_THREADS")) {
            char* end = nullptr;
            long cap = std::strtol(env, &end, 10);
            if (end != env && cap >= 1) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(cap));
        }
        return hw;
    }();
    return n;
}

/// Invokes fn(chunk_index, begin, end) over fixed-size chunks of [0, n).
/// Chunk boundaries depend only on n and chunk_size, never on the worker
/// count, so per-chunk partial results combined in chunk order reproduce the
/// sequential answer bit for bit.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk_size, Fn&& fn) {
    if (n == 0) return;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const std::size_t workers = std::min(worker_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            // Static striping: chunk c handled by worker c % workers.
            for (std::size_t c = w; c < n_chunks; c += workers)
                fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        });
    }
    for (auto& t : pool) t.join();
}

/// Path loops default to chunks of 1024.
template <class Fn>
void parallel_paths(std::size_t n_paths, Fn&& fn) {
    parallel_chunks(n_paths, 1024, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t p = lo; p < hi; ++p) fn(p);
    });
}

}  // namespace bdsde
