#pragma once

// Replica-level parallelism. Results are always collected by index, so the output of
// map_indexed does not depend on the number of threads or on scheduling.

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace polyext::parallel {

// requested > 0 wins; otherwise POLYEXT_THREADS; otherwise hardware concurrency (at least 1).
int thread_count(int requested = 0);

std::uint64_t splitmix64(std::uint64_t x);

// Disorder seed of one replica. Shared across N so that runs at different N are paired.
std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica);

// out[i] = f(i) for i in [0, n). The exception thrown for the smallest failing index is rethrown.
template <class F>
auto map_indexed(std::int64_t n, int threads, F&& f) -> std::vector<std::invoke_result_t<F&, std::int64_t>> {
    using R = std::invoke_result_t<F&, std::int64_t>;
    std::vector<R> out(n > 0 ? std::size_t(n) : 0);
    if (n <= 0) return out;
    int workers = threads < 1 ? 1 : threads;
    if (std::int64_t(workers) > n) workers = int(n);
    std::atomic<std::int64_t> next{0};
    std::mutex err_mutex;
    std::int64_t err_index = n;
    std::exception_ptr err;
    auto work = [&] {
        for (std::int64_t i = next++; i < n; i = next++) {
            try {
                out[std::size_t(i)] = f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(std::size_t(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace polyext::parallel
