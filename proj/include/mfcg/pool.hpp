#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mfcg {

// Shared worker pool for data-parallel loops. Work is split into fixed-size
// blocks and claimed through an atomic counter; every block is computed
// independently, so results do not depend on how many threads run or which
// thread takes which block. Reductions must combine per-block partials in
// block order on the caller side.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool;
    return pool;
  }

  int worker_count() const { return static_cast<int>(workers_.size()); }

  // fn(block_begin, block_end) over [0, n) in chunks of `grain`
  void for_blocks(long n, long grain,
                  const std::function<void(long, long)>& fn) {
    if (n <= 0) return;
    if (grain < 1) grain = 1;
    const long nblocks = (n + grain - 1) / grain;
    if (workers_.empty() || nblocks == 1 || in_pool_job()) {
      for (long b = 0; b < nblocks; ++b)
        fn(b * grain, std::min(n, (b + 1) * grain));
      return;
    }
    std::unique_lock<std::mutex> lock(mutex_);
    job_fn_ = &fn;
    job_n_ = n;
    job_grain_ = grain;
    next_block_.store(0, std::memory_order_relaxed);
    pending_ = static_cast<int>(workers_.size());
    ++generation_;
    lock.unlock();
    cv_start_.notify_all();
    run_blocks(fn, n, grain);  // caller participates
    lock.lock();
    cv_done_.wait(lock, [&] { return pending_ == 0; });
    job_fn_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
      ++generation_;
    }
    cv_start_.notify_all();
    for (auto& t : workers_) t.join();
  }

 private:
  ThreadPool() {
    int n = 0;
    if (const char* env = std::getenv("MFCG_THREADS")) n = std::atoi(env);
    if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    for (int i = 0; i < n - 1; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  static bool& in_pool_job() {
    thread_local bool flag = false;
    return flag;
  }

  void run_blocks(const std::function<void(long, long)>& fn, long n,
                  long grain) {
    in_pool_job() = true;
    for (;;) {
      const long b = next_block_.fetch_add(1, std::memory_order_relaxed);
      const long begin = b * grain;
      if (begin >= n) break;
      fn(begin, std::min(n, begin + grain));
    }
    in_pool_job() = false;
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lock(mutex_);
      cv_start_.wait(lock, [&] { return stop_ || generation_ != seen; });
      seen = generation_;
      if (stop_) return;
      const auto* fn = job_fn_;
      const long n = job_n_, grain = job_grain_;
      lock.unlock();
      if (fn) run_blocks(*fn, n, grain);
      lock.lock();
      if (--pending_ == 0) cv_done_.notify_all();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::condition_variable cv_start_, cv_done_;
  const std::function<void(long, long)>* job_fn_ = nullptr;
  long job_n_ = 0, job_grain_ = 1;
  std::atomic<long> next_block_{0};
  std::uint64_t generation_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

inline void parallel_blocks(long n, long grain,
                            const std::function<void(long, long)>& fn) {
  ThreadPool::instance().for_blocks(n, grain, fn);
}

}  // namespace mfcg
