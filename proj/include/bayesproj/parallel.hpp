#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace bayesproj {

// Thread count from BAYESPROJ_THREADS, else 1.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("BAYESPROJ_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

// Splits [0, n) into contiguous blocks and calls body(block, begin, end) on
// each, one block per worker. Bodies must only write to their own range; the
// first exception raised by any worker is rethrown after all have joined.
template <typename Body>
void parallel_blocks(std::size_t n, unsigned threads, Body&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    if (n > 0) body(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  auto run = [&](std::size_t b) {
    const std::size_t begin = n * b / workers;
    const std::size_t end = n * (b + 1) / workers;
    try {
      body(b, begin, end);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  for (std::size_t b = 1; b < workers; ++b) pool.emplace_back(run, b);
  run(0);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  parallel_blocks(n, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) body(i);
  });
}

// Number of blocks parallel_blocks will use for n items.
inline std::size_t block_count(std::size_t n, unsigned threads) {
  return std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
}

}  // namespace bayesproj
