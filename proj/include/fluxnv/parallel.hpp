#pragma once

#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fluxnv {

// Fork-join helper for embarrassingly parallel index loops. Workers own
// disjoint contiguous index ranges and write results into caller-preallocated
// slots, so the merged output is independent of the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(int threads = 0)
      : threads_(threads > 0 ? threads
                             : static_cast<int>(std::thread::hardware_concurrency())) {
    if (threads_ < 1) threads_ = 1;
  }

  int size() const { return threads_; }

  void for_each_index(std::size_t count, const std::function<void(std::size_t)>& fn) const {
    if (count == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads_), count);
    if (workers == 1) {
      for (std::size_t i = 0; i < count; ++i) fn(i);
      return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t lo = count * w / workers;
      const std::size_t hi = count * (w + 1) / workers;
      pool.emplace_back([&, lo, hi, w] {
        try {
          for (std::size_t i = lo; i < hi; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

 private:
  int threads_;
};

}  // namespace fluxnv
