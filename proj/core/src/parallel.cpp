#include "fbmstm/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fbmstm {

int thread_budget() noexcept {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  const char* env = std::getenv("FBM_STM_THREADS");
  if (env == nullptr || *env == '\0') return hw;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || v < 0) return hw;
  if (v == 0) return hw;
  return static_cast<int>(v > 256 ? 256 : v);
}

void for_each_block(
    std::int64_t n, std::int64_t block_size,
    const std::function<void(std::int64_t, std::int64_t, std::int64_t)>& fn,
    int n_threads) {
  if (n <= 0) return;
  if (block_size < 1) block_size = 1;
  const std::int64_t n_blocks = (n + block_size - 1) / block_size;
  if (n_threads <= 0) n_threads = thread_budget();
  if (n_threads > n_blocks) n_threads = static_cast<int>(n_blocks);

  auto run_block = [&](std::int64_t b) {
    const std::int64_t begin = b * block_size;
    const std::int64_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };

  if (n_threads <= 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<bool> abort{false};

  auto worker = [&]() {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) return;
      try {
        run_block(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fbmstm
