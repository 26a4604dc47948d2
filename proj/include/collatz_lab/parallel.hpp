#pragma once

// Range sharding over [begin, end). Work is split into fixed-size chunks
// whose boundaries depend only on the range and chunk size, never on the
// thread count, so per-chunk results merged in chunk order are identical
// for any degree of parallelism.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace collatz_lab {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct Chunk {
  std::size_t index;
  std::uint64_t begin;
  std::uint64_t end;
};

inline std::vector<Chunk> make_chunks(std::uint64_t begin, std::uint64_t end, std::uint64_t chunk_size) {
  std::vector<Chunk> out;
  if (chunk_size == 0) chunk_size = 1;
  for (std::uint64_t lo = begin; lo < end;) {
    std::uint64_t hi = end - lo > chunk_size ? lo + chunk_size : end;
    out.push_back({out.size(), lo, hi});
    lo = hi;
  }
  return out;
}

/// Runs fn(chunk) for every chunk on up to `threads` workers (0 = hardware).
/// The first exception thrown by any worker is rethrown on the caller.
template <class Fn>
void for_each_chunk(const std::vector<Chunk>& chunks, unsigned threads, Fn&& fn) {
  threads = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(chunks.size(), 1)));
  if (threads <= 1) {
    for (const auto& c : chunks) fn(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= chunks.size()) return;
      try {
        fn(chunks[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = chunks.size();
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

/// Maps every chunk to a partial result, then folds the partials left to
/// right in chunk order.
template <class Partial, class Map, class Fold>
Partial map_reduce_chunks(const std::vector<Chunk>& chunks, unsigned threads, Partial init, Map&& map,
                          Fold&& fold) {
  std::vector<Partial> partials(chunks.size(), init);
  for_each_chunk(chunks, threads, [&](const Chunk& c) { partials[c.index] = map(c); });
  Partial acc = std::move(init);
  for (auto& p : partials) fold(acc, p);
  return acc;
}

}  // namespace collatz_lab
