#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace wcl {

// Worker cap: WCL_THREADS if set, otherwise the machine's core count.
inline int thread_cap() {
    if (const char* env = std::getenv("WCL_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Index-parallel loop; each index writes only its own slot, so results are
// deterministic regardless of scheduling.
inline void parallel_for(int n, const std::function<void(int)>& body) {
    const int workers = std::min(thread_cap(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace wcl
