#ifndef BLOOMCORESET_PARALLEL_HPP
#define BLOOMCORESET_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace bloomcoreset {

/// Worker count: explicit request wins, then BLOOMCORESET_THREADS, then
/// hardware concurrency.
inline std::size_t resolve_threads(std::size_t requested = 0) {
  if (requested > 0) {
    return requested;
  }
  if (const char* env = std::getenv("BLOOMCORESET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) {
      return static_cast<std::size_t>(v);
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Calls fn(block_index, begin, end) for every block of a fixed-size grid
/// over [0, total). The grid depends only on block_size, never on the
/// worker count, so per-block results are identical for any number of
/// threads; callers merge them in block order.
template <typename Fn>
void for_each_block(std::size_t total, std::size_t block_size,
                    std::size_t num_threads, Fn&& fn) {
  if (total == 0) {
    return;
  }
  const std::size_t num_blocks = (total + block_size - 1) / block_size;
  const std::size_t workers = std::min(resolve_threads(num_threads), num_blocks);

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(begin + block_size, total);
    fn(b, begin, end);
  };

  if (workers <= 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) {
      run_block(b);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= num_blocks) {
        break;
      }
      try {
        run_block(b);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    threads.emplace_back(worker);
  }
  for (auto& t : threads) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace bloomcoreset

#endif
