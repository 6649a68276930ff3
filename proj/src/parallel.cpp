#include "bpsre/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace bpsre {

void parallel_chunks(std::uint64_t total, std::uint64_t chunk, unsigned workers,
                     const std::function<void(std::uint64_t, std::uint64_t)>& body) {
    if (total == 0) {
        return;
    }
    chunk = std::max<std::uint64_t>(chunk, 1);
    const std::uint64_t chunks = (total + chunk - 1) / chunk;
    workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, chunks));

    std::atomic<std::uint64_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::uint64_t error_chunk = chunks;
    std::exception_ptr error;

    auto run = [&] {
        for (;;) {
            const std::uint64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= chunks || failed.load(std::memory_order_relaxed)) {
                return;
            }
            const std::uint64_t begin = c * chunk;
            const std::uint64_t end = std::min(total, begin + chunk);
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (c < error_chunk) {
                    error_chunk = c;
                    error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (unsigned w = 1; w < workers; ++w) {
            pool.emplace_back(run);
        }
        run();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

unsigned default_workers() {
    if (const char* env = std::getenv("BPSRE_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) {
                return static_cast<unsigned>(v);
            }
        } catch (const std::exception&) {
        }
    }
    return 1;
}

}  // namespace bpsre
