#include "bikevol/core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bikevol {

namespace {

std::atomic<int> g_default_workers{1};
thread_local bool t_inside_worker = false;

}  // namespace

void set_default_workers(int workers) { g_default_workers = std::max(1, workers); }

int default_workers() { return g_default_workers; }

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
    if (workers <= 0) workers = default_workers();
    const size_t threads = std::min<size_t>(static_cast<size_t>(workers), n);
    if (threads <= 1 || t_inside_worker) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    size_t error_index = n;
    std::exception_ptr error;

    auto worker = [&] {
        t_inside_worker = true;
        for (size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
        t_inside_worker = false;
    };

    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace bikevol
