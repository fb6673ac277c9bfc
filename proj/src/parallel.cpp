// SPDX-License-Identifier: Apache-2.0

#include "mor/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mor
{

std::size_t thread_count()
{
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("MOR_THREADS"))
  {
    try
    {
      const long requested = std::stol(env);
      if (requested > 0)
      {
        return static_cast<std::size_t>(requested);
      }
    }
    catch (const std::exception &)
    {
      // Unparseable values fall back to auto.
    }
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body)
{
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
    {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  auto run = [&]()
  {
    for (std::size_t i = next++; i < n; i = next++)
    {
      try
      {
        body(i);
      }
      catch (...)
      {
        std::lock_guard<std::mutex> guard(failure_lock);
        if (!failure)
        {
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t)
  {
    pool.emplace_back(run);
  }
  run();
  for (auto &th : pool)
  {
    th.join();
  }
  if (failure)
  {
    std::rethrow_exception(failure);
  }
}

}  // namespace mor
