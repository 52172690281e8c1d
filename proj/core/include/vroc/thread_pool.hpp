#pragma once

#include <cstddef>
#include <functional>

namespace vroc {

// Process-wide worker pool used for frame-parallel and round-parallel
// stages. parallel_for partitions [0, n) into contiguous blocks; each
// block runs on one thread, so per-index work that writes disjoint
// outputs stays deterministic regardless of thread count. Nested calls
// from inside a worker run serially.
class ThreadPool {
 public:
  static ThreadPool& instance();

  // Must be called before first use to take effect; later calls with a
  // different count rebuild the pool (only safe while idle).
  static void set_threads(int n);
  static int threads();

  void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& block_fn);

  // Convenience: per-index body.
  void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

 private:
  ThreadPool() = default;
};

// Resolves the worker count: explicit argument if > 0, else the
// MINIMAP_ORACLE_THREADS environment variable, else logical cores.
int resolve_thread_count(int requested);

}  // namespace vroc
