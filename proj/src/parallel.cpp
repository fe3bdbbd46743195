#include "ridge/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace ridge {

namespace {

std::size_t configured_cap() {
    static const std::size_t cap = [] {
        if (const char* env = std::getenv("RIDGE_SPLIT_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1)
                return static_cast<std::size_t>(v);
        }
        const unsigned hw = std::thread::hardware_concurrency();
        return static_cast<std::size_t>(hw ? hw : 1);
    }();
    return cap;
}

constexpr std::size_t kMinChunk = 4096;

} // namespace

std::size_t worker_count(std::size_t items) {
    const std::size_t by_work = std::max<std::size_t>(1, items / kMinChunk);
    return std::min(configured_cap(), by_work);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0)
        return;
    const std::size_t workers = worker_count(n);
    if (workers <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e)
            break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& t : pool)
        t.join();
}

} // namespace ridge
