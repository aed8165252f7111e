#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "pass/dataset.hpp"
#include "pass/encoder.hpp"
#include "pass/metrics.hpp"

namespace pass {

// Worker count from PASS_THREADS, defaulting to 1.
int default_threads();

/// Runs fn(chunk, begin, end) over `threads` contiguous chunks of [0, n).
/// Chunk boundaries depend only on n and threads, so ordered reductions over
/// chunk results are deterministic for a given thread count.
template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    const std::size_t chunks = std::min(workers, std::max<std::size_t>(n, 1));
    if (chunks <= 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = n * c / chunks;
        const std::size_t end = n * (c + 1) / chunks;
        pool.emplace_back([&, c, begin, end] {
            try {
                fn(c, begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

inline std::size_t chunk_count(std::size_t n, int threads) {
    return std::min(static_cast<std::size_t>(std::max(1, threads)), std::max<std::size_t>(n, 1));
}

// Sums per-chunk gradients in chunk order into the first accumulator.
void reduce_gradients(std::vector<ModelParams<double>>& partial);

/// Eval-mode classifier outputs for every example.
std::vector<ClassifierOutput<double>> predict(const ModelParams<double>& params, const Dataset& data,
                                              int threads = 1);

/// Macro metrics of eval-mode argmax predictions over labeled examples.
MetricsReport evaluate(const ModelParams<double>& params, const Dataset& data, int threads = 1);

}  // namespace pass
