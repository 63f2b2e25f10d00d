// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace hsplat {

// Worker-count control. 0 = use OpenMP default. Reads HYBRIDSPLAT_THREADS on
// first use unless set_threads() was called.
void set_threads(int n);
int thread_count();

namespace detail {
void run_parallel(std::int64_t n, void (*body)(std::int64_t, void*), void* ctx);
}

// Parallel loop over [0, n). The body must write to disjoint locations per
// index; iteration-to-thread assignment is unspecified, so any result that
// depends on it is a bug in the caller.
template <class F>
void parallel_for(std::int64_t n, F&& f) {
  struct Ctx {
    F* f;
  } ctx{&f};
  detail::run_parallel(
      n, [](std::int64_t i, void* c) { (*static_cast<Ctx*>(c)->f)(i); }, &ctx);
}

// Fixed-size chunking of [0, n). Chunk boundaries depend only on n and
// chunk_size, never on the worker count, so per-chunk partial results merged
// in chunk order give bit-identical sums for any number of threads.
struct ChunkRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

inline std::vector<ChunkRange> make_chunks(std::int64_t n, std::int64_t chunk_size) {
  std::vector<ChunkRange> chunks;
  for (std::int64_t b = 0; b < n; b += chunk_size) {
    chunks.push_back({b, b + chunk_size < n ? b + chunk_size : n});
  }
  return chunks;
}

// Runs f(chunk_index, begin, end) in parallel over fixed chunks.
template <class F>
void parallel_chunks(std::int64_t n, std::int64_t chunk_size, F&& f) {
  const auto chunks = make_chunks(n, chunk_size);
  parallel_for(static_cast<std::int64_t>(chunks.size()), [&](std::int64_t c) {
    f(c, chunks[static_cast<size_t>(c)].begin, chunks[static_cast<size_t>(c)].end);
  });
}

}  // namespace hsplat
