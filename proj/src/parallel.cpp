#include "tat/parallel.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace tat {

int worker_count() {
    int n = int(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("TAT_MAX_WORKERS")) {
        try {
            const int cap = std::stoi(env);
            if (cap >= 1) n = std::min(n, cap);
        } catch (const std::exception&) {
        }
    }
    return n;
}

void parallel_chunks(int n, const std::function<void(int, int, int)>& body, int workers) {
    if (n <= 0) return;
    if (workers <= 0) workers = worker_count();
    workers = std::min(workers, n);
    if (workers == 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
        const int lo = int(std::int64_t(n) * w / workers);
        const int hi = int(std::int64_t(n) * (w + 1) / workers);
        pool.emplace_back([&, lo, hi, w] {
            try {
                body(lo, hi, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace tat
