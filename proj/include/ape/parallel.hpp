#pragma once

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ape {

/// Runs fn(i) for i in [0, n) on up to `parallelism` threads. The first
/// exception wins and is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    if (parallelism <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(parallelism, n);
    std::mutex err_mu;
    std::exception_ptr error;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace ape
