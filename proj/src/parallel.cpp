#include "fragcoag/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fragcoag {

unsigned worker_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("FRAGCOAG_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1 && v < 1024) hw = static_cast<unsigned>(v);
    }
    return hw;
}

void parallel_chunks(std::size_t total, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    const std::size_t chunks = chunk_count(total, chunk_size);
    if (chunks == 0) return;
    unsigned workers = worker_threads();
    if (workers > chunks) workers = static_cast<unsigned>(chunks);

    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run = [&]() {
        for (;;) {
            std::size_t c = cursor.fetch_add(1);
            if (c >= chunks) return;
            std::size_t begin = c * chunk_size;
            std::size_t end = begin + chunk_size < total ? begin + chunk_size : total;
            try {
                fn(begin, end, c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers <= 1) {
        run();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
        for (std::thread& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace fragcoag
