#ifndef CSIDECOMP_PARALLEL_HPP
#define CSIDECOMP_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace csid {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> threads{0};
    return threads;
}

inline bool& in_parallel_region() {
    thread_local bool inside = false;
    return inside;
}
} // namespace detail

/// 0 restores the hardware default.
inline void set_default_threads(unsigned threads) { detail::thread_setting().store(threads); }

inline unsigned default_threads() {
    const unsigned configured = detail::thread_setting().load();
    if (configured != 0) {
        return configured;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks; the
/// first exception thrown by any worker is rethrown on the calling thread.
/// Results must be written to per-index slots so the outcome does not depend
/// on the thread count. Calls nested inside a worker run serially.
template <class Body>
void parallel_for(std::size_t n, Body&& body, unsigned threads = default_threads()) {
    if (n == 0) {
        return;
    }
    const std::size_t workers =
        detail::in_parallel_region() ? 1 : std::min<std::size_t>(std::max(1u, threads), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        detail::in_parallel_region() = true;
        struct Reset {
            ~Reset() { detail::in_parallel_region() = false; }
        } reset;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(n);
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) {
        pool.emplace_back(run);
    }
    run();
    for (auto& worker : pool) {
        worker.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace csid

#endif
