#include "fsmfp/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace fsmfp {

void parallel_chunks(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = std::min(workers, count);
  if (workers <= 1) {
    fn(0, count);
    return;
  }
  const std::size_t chunk = (count + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(begin + chunk, count);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : threads) t.join();
}

}  // namespace fsmfp
