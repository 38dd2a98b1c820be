#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace excursor {

/// Worker cap: EXCURSOR_THREADS if set and positive, hardware concurrency
/// otherwise. Results never depend on this value; tasks derive their own
/// seeds and write to disjoint slots.
inline unsigned max_threads() {
    static const unsigned cached = [] {
        if (const char* env = std::getenv("EXCURSOR_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<unsigned>(v);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? hw : 1u;
    }();
    return cached;
}

template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace excursor
