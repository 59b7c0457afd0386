// SPDX-License-Identifier: Apache-2.0
//
// Trial-parallel reduction with a schedule-independent result: trials are
// grouped into fixed-size chunks, each chunk is reduced into its own
// accumulator, and the chunk accumulators are merged in index order.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qmimo {

inline constexpr std::size_t kTrialChunk = 512;

inline unsigned default_threads()
{
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1u : n;
}

/// Runs fn(acc, trial) for trial in [0, trials) and returns the merged result.
/// Acc must be copyable and provide merge(const Acc&); `zero` is the identity.
template <class Acc, class TrialFn>
Acc reduce_trials(std::size_t trials, const Acc& zero, TrialFn&& fn, unsigned threads = 0)
{
    if (threads == 0) threads = default_threads();
    const std::size_t chunks = (trials + kTrialChunk - 1) / kTrialChunk;
    std::vector<Acc> partial(chunks, zero);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * kTrialChunk;
        const std::size_t end = std::min(trials, begin + kTrialChunk);
        for (std::size_t t = begin; t < end; ++t) fn(partial[c], t);
    };

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));
    if (workers <= 1)
    {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    }
    else
    {
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < chunks; c = next++)
                {
                    try
                    {
                        run_chunk(c);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

    Acc total = zero;
    for (const auto& p : partial) total.merge(p);
    return total;
}

} // namespace qmimo
