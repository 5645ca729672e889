#include "lentil/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace lentil {

namespace {

int initial_cap()
{
    if (const char* env = std::getenv("LENTIL_THREADS"))
    {
        int v = std::atoi(env);
        if (v > 0)
            return v;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int>& cap_storage()
{
    static std::atomic<int> cap{initial_cap()};
    return cap;
}

}  // namespace

int thread_cap() { return cap_storage().load(); }

void set_thread_cap(int n) { cap_storage().store(std::max(1, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(thread_cap()), n);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&] {
        for (;;)
        {
            std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

}  // namespace lentil
