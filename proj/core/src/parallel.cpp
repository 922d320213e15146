#include "roadseg/parallel.hpp"

#include <atomic>
#include <mutex>
#include <thread>
#include <vector>

namespace roadseg {

namespace {
int g_num_threads = 0;
}

void set_num_threads(int n) { g_num_threads = n < 0 ? 0 : n; }

int num_threads() {
    if (g_num_threads > 0) return g_num_threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    int workers = num_threads();
    if (workers <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    if (static_cast<std::size_t>(workers) > count) workers = static_cast<int>(count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace roadseg
