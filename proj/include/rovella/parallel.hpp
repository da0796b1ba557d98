#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rovella {

// Runs body(chunk_index, begin, end) over [0, count) split into fixed-size chunks.
// Chunk boundaries never depend on `workers`, so per-chunk results reduced in chunk
// order are identical for any worker count. The first exception is rethrown.
template <class Body>
void for_each_chunk(std::size_t count, std::size_t chunk, int workers, Body&& body) {
    if (count == 0) return;
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t chunks = (count + chunk - 1) / chunk;
    const auto run = [&](std::size_t c) { body(c, c * chunk, std::min(count, (c + 1) * chunk)); };
    const std::size_t threads = std::min<std::size_t>(chunks, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    run(c);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline std::size_t chunk_count(std::size_t count, std::size_t chunk) {
    return count == 0 ? 0 : (count + chunk - 1) / chunk;
}

}  // namespace rovella
