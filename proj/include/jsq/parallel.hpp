#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jsq
{
    /// Number of workers to use when the caller passes 0.
    inline unsigned default_workers()
    {
        return std::max(1U, std::thread::hardware_concurrency());
    }

    /// Runs body(i) for i in [0, count) on a bounded set of worker threads. Work items are
    /// claimed in index order; the first exception (by index) is rethrown after all workers
    /// have joined. Callers write results into per-index slots, so output never depends on
    /// the worker count.
    template <class Body>
    void parallel_for(std::size_t count, unsigned workers, Body&& body)
    {
        if (workers == 0)
        {
            workers = default_workers();
        }
        workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
        if (workers <= 1)
        {
            for (std::size_t i = 0; i < count; ++i)
            {
                body(i);
            }
            return;
        }

        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::mutex error_mutex;
        std::size_t error_index = count;
        std::exception_ptr error;

        auto worker = [&] {
            for (;;)
            {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load())
                {
                    return;
                }
                try
                {
                    body(i);
                }
                catch (...)
                {
                    std::lock_guard lock(error_mutex);
                    if (i < error_index)
                    {
                        error_index = i;
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        };

        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back(worker);
        }
        pool.clear();
        if (error)
        {
            std::rethrow_exception(error);
        }
    }
}
