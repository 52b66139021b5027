#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace isingdyn {

inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs body(i) for i in [0, count) on up to thread_count threads, pulling
// indices from a shared counter. cancel, when given, is polled before each
// index; setting it skips the remaining work. The first exception thrown by
// any body is rethrown on the calling thread.
inline void parallel_for(std::size_t count, int thread_count,
                         const std::function<void(std::size_t)>& body,
                         std::atomic<bool>* cancel = nullptr) {
    const int threads = std::min<std::size_t>(resolve_thread_count(thread_count), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            if (cancel && cancel->load(std::memory_order_relaxed)) return;
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            while (true) {
                if (failed.load(std::memory_order_relaxed)) return;
                if (cancel && cancel->load(std::memory_order_relaxed)) return;
                const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace isingdyn
