#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ux {

/// Caps the worker count for all parallel kernels (CLI --threads).
void set_max_threads(int n);
int max_threads();

/// Static-schedule parallel loop. Every iteration writes a disjoint slice of
/// the output, so results are bit-identical for any thread count.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

}  // namespace ux
