#include "demnet/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace demnet {

namespace {

int read_thread_count() {
  if (const char* env = std::getenv("DEMNET_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace

int thread_count() {
  static const int count = read_thread_count();
  return count;
}

int parallel_chunk_count(int n) {
  return n <= 0 ? 0 : std::min(thread_count(), n);
}

void parallel_chunks_indexed(int n,
                             const std::function<void(int, int, int)>& fn) {
  int workers = parallel_chunk_count(n);
  if (workers <= 0) return;
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  // Static partition: the first (n % workers) chunks get one extra item.
  int base = n / workers;
  int extra = n % workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  int begin = 0;
  for (int w = 0; w < workers; ++w) {
    int end = begin + base + (w < extra ? 1 : 0);
    if (w + 1 == workers) {
      fn(w, begin, end);
    } else {
      pool.emplace_back(fn, w, begin, end);
    }
    begin = end;
  }
  for (std::thread& t : pool) t.join();
}

void parallel_chunks(int n, const std::function<void(int, int)>& fn) {
  parallel_chunks_indexed(n, [&fn](int, int begin, int end) {
    fn(begin, end);
  });
}

}  // namespace demnet
