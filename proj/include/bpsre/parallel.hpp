#pragma once

#include <cstdint>
#include <functional>

namespace bpsre {

/// Calls body(begin, end) for consecutive chunks covering [0, total) on
/// `workers` threads (the caller's thread included). Chunks are claimed
/// dynamically, so callers must write results by index and reduce in a
/// fixed order afterwards. The first exception (lowest chunk) is rethrown
/// once all workers have stopped.
void parallel_chunks(std::uint64_t total, std::uint64_t chunk, unsigned workers,
                     const std::function<void(std::uint64_t, std::uint64_t)>& body);

/// Worker count from BPSRE_WORKERS, falling back to 1.
unsigned default_workers();

}  // namespace bpsre
