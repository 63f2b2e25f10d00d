// Copyright (c) 2026 HybridSplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "hsplat/parallel.hpp"

#include <atomic>
#include <cstdlib>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace hsplat {

namespace {
std::atomic<int> g_threads{-1};  // -1 = not initialized yet

int resolve_default() {
  if (const char* env = std::getenv("HYBRIDSPLAT_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;
}
}  // namespace

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
  int n = g_threads.load();
  if (n == -1) {
    n = resolve_default();
    g_threads.store(n);
  }
#if defined(_OPENMP)
  if (n == 0) return omp_get_max_threads();
#endif
  return n == 0 ? 1 : n;
}

namespace detail {
void run_parallel(std::int64_t n, void (*body)(std::int64_t, void*), void* ctx) {
#if defined(_OPENMP)
  const int nt = thread_count();
#pragma omp parallel for schedule(static) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) {
    body(i, ctx);
  }
#else
  for (std::int64_t i = 0; i < n; ++i) {
    body(i, ctx);
  }
#endif
}
}  // namespace detail

}  // namespace hsplat
