#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hcmm
{
  /// Runs body(i) for i in [0, n) on up to `threads` workers with a static
  /// contiguous partition. The first exception (lowest chunk) is rethrown.
  template <class Body>
  void parallel_for(int n, int threads, Body&& body)
  {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1)
    {
      for (int i = 0; i < n; ++i) body(i);
      return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
    {
      const int lo = static_cast<int>(static_cast<long long>(n) * t / threads);
      const int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
      pool.emplace_back([&, lo, hi, t] {
        try
        {
          for (int i = lo; i < hi; ++i) body(i);
        }
        catch (...)
        {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
}  // namespace hcmm
