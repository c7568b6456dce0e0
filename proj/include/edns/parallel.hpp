#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace edns {

/// Neumaier-compensated accumulator. Summation order is fixed by the caller,
/// so results do not depend on the thread count.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            carry_ += (sum_ - t) + x;
        else
            carry_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

inline double compensated_total(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

/// Number of worker threads for field kernels. EDNS_THREADS overrides the
/// hardware count; values < 1 are ignored.
inline unsigned kernel_threads() {
    static const unsigned count = [] {
        if (const char* env = std::getenv("EDNS_THREADS")) {
            try {
                const long v = std::stol(env);
                if (v >= 1) return static_cast<unsigned>(v);
            } catch (...) {
            }
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }();
    return count;
}

/// Runs body(c) for every chunk c in [0, chunks). Chunks are striped over
/// threads; the first exception thrown by any chunk is rethrown.
template <class Body>
void for_each_chunk(std::size_t chunks, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(kernel_threads(), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_lock;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t c = w; c < chunks; c += workers) body(c);
                } catch (...) {
                    std::lock_guard lock(failure_lock);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

/// Chunked reduction: each chunk produces one partial, partials are combined
/// in chunk order with compensation. Bit-stable across thread counts.
template <class ChunkSum>
double reduce_chunks(std::size_t chunks, ChunkSum&& chunk_sum) {
    std::vector<double> partial(chunks, 0.0);
    for_each_chunk(chunks, [&](std::size_t c) { partial[c] = chunk_sum(c); });
    return compensated_total(partial);
}

}  // namespace edns
