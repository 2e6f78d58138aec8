#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace spde {

// Worker cap from SPDE_LAB_THREADS, else hardware concurrency.
int worker_count();

// Static contiguous partition of [0, n). Callers write results by index, so
// the outcome never depends on the worker count.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    pool.clear();
    if (first_error) std::rethrow_exception(first_error);
}

// Pairwise reduction with a topology fixed by the element count only.
template <class T>
T tree_sum(std::span<const T> xs) {
    if (xs.empty()) return T{};
    if (xs.size() == 1) return xs[0];
    const std::size_t mid = xs.size() / 2;
    T left = tree_sum(xs.subspan(0, mid));
    T right = tree_sum(xs.subspan(mid));
    return left + right;
}

template <class T>
T tree_sum(const std::vector<T>& xs) {
    return tree_sum(std::span<const T>(xs.data(), xs.size()));
}

}  // namespace spde
