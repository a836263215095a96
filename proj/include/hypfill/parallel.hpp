#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace hypfill {

inline int& worker_count() {
    static int n = static_cast<int>(std::thread::hardware_concurrency());
    return n;
}

/// Deterministic parallel map: body(i) must write only into slot i of a
/// preallocated output. Reductions over the results stay sequential.
inline void parallel_for(int count, const std::function<void(int)>& body) {
    int workers = std::max(1, std::min(worker_count(), count));
    if (workers == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count) return;
                body(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hypfill
