#include "edgeloc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace edgeloc {

namespace {
std::atomic<int> g_threads{1};
thread_local bool t_inside_worker = false;
}

void set_thread_count(int n) { g_threads.store(n < 1 ? 1 : n); }

int thread_count() { return g_threads.load(); }

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    // Nested calls run sequentially inside their worker: one level of
    // fan-out is enough, and it keeps the thread count bounded.
    int workers = t_inside_worker
                      ? 1
                      : static_cast<int>(std::min<size_t>(static_cast<size_t>(thread_count()), n));
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        size_t lo = static_cast<size_t>(w) * chunk;
        size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, &err = errors[static_cast<size_t>(w)], lo, hi] {
            t_inside_worker = true;
            try {
                for (size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
}

}  // namespace edgeloc
