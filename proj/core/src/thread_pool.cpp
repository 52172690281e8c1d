#include "vroc/thread_pool.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace vroc {

namespace {

thread_local bool g_in_worker = false;

struct Pool {
  int n_threads = 1;
  std::vector<std::thread> workers;
  std::mutex mu;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  // Current job: blocks indexed 0..n_blocks-1 over [0, n).
  const std::function<void(std::size_t, std::size_t)>* job = nullptr;
  std::size_t job_n = 0;
  std::size_t n_blocks = 0;
  std::atomic<std::size_t> next_block{0};
  std::size_t blocks_done = 0;
  std::uint64_t job_id = 0;
  bool shutting_down = false;

  ~Pool() { stop(); }

  void stop() {
    {
      std::lock_guard<std::mutex> lk(mu);
      shutting_down = true;
    }
    cv_work.notify_all();
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
    workers.clear();
  }

  void start(int n) {
    stop();
    {
      std::lock_guard<std::mutex> lk(mu);
      shutting_down = false;
      n_threads = n;
    }
    for (int i = 1; i < n; ++i) {
      workers.emplace_back([this] { worker_loop(); });
    }
  }

  void worker_loop() {
    g_in_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lk(mu);
        cv_work.wait(lk, [&] { return shutting_down || job_id != seen; });
        if (shutting_down) return;
        seen = job_id;
      }
      run_blocks();
    }
  }

  void run_blocks() {
    const std::size_t nb = n_blocks;
    const std::size_t n = job_n;
    const std::size_t chunk = (n + nb - 1) / nb;
    std::size_t done_here = 0;
    for (;;) {
      std::size_t b = next_block.fetch_add(1);
      if (b >= nb) break;
      const std::size_t lo = b * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      if (lo < hi) (*job)(lo, hi);
      ++done_here;
    }
    if (done_here > 0) {
      std::lock_guard<std::mutex> lk(mu);
      blocks_done += done_here;
      if (blocks_done == nb) cv_done.notify_one();
    }
  }
};

Pool& pool() {
  static Pool p;
  return p;
}

int g_requested_threads = 0;
bool g_started = false;

void ensure_started() {
  if (!g_started) {
    int n = g_requested_threads > 0 ? g_requested_threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
    if (n < 1) n = 1;
    pool().start(n);
    g_started = true;
  }
}

}  // namespace

ThreadPool& ThreadPool::instance() {
  ensure_started();
  static ThreadPool tp;
  return tp;
}

void ThreadPool::set_threads(int n) {
  if (n < 1) n = 1;
  g_requested_threads = n;
  if (g_started) pool().start(n);
  g_started = true;
}

int ThreadPool::threads() {
  ensure_started();
  return pool().n_threads;
}

void ThreadPool::parallel_for(std::size_t n,
                              const std::function<void(std::size_t, std::size_t)>& block_fn) {
  if (n == 0) return;
  Pool& p = pool();
  if (g_in_worker || p.n_threads <= 1 || n == 1) {
    block_fn(0, n);
    return;
  }
  const std::size_t nb = std::min<std::size_t>(n, static_cast<std::size_t>(p.n_threads) * 4);
  {
    std::lock_guard<std::mutex> lk(p.mu);
    p.job = &block_fn;
    p.job_n = n;
    p.n_blocks = nb;
    p.next_block.store(0);
    p.blocks_done = 0;
    ++p.job_id;
  }
  p.cv_work.notify_all();
  // The calling thread participates too.
  p.run_blocks();
  std::unique_lock<std::mutex> lk(p.mu);
  p.cv_done.wait(lk, [&] { return p.blocks_done == p.n_blocks; });
  p.job = nullptr;
}

void ThreadPool::for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
  parallel_for(n, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) fn(i);
  });
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MINIMAP_ORACLE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 0 ? hw : 1;
}

}  // namespace vroc
