#pragma once

#include <cstddef>
#include <functional>

namespace fragcoag {

// Work is cut into fixed-size chunks (layout independent of the worker count),
// workers claim chunks through an atomic cursor, and the caller reduces the
// per-chunk results in chunk order.  Replica-level results therefore do not
// depend on scheduling, which is what keeps multi-threaded Monte-Carlo output
// byte-reproducible.
inline constexpr std::size_t kReplicaChunk = 64;

// number of worker threads: min(hardware, FRAGCOAG_THREADS env override); >= 1
unsigned worker_threads();

// invoke fn(begin, end, chunk_index) for each chunk [begin, end) of 0..total;
// fn runs concurrently and must only write state owned by its chunk index.
// The first exception thrown by any chunk is rethrown after all workers join.
void parallel_chunks(std::size_t total, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t total, std::size_t chunk_size) {
    return total == 0 ? 0 : (total + chunk_size - 1) / chunk_size;
}

} // namespace fragcoag
