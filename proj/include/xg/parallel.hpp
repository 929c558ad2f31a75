#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace xg {

// Runs fn(i) for i in [0, n). Iterations must be independent; any OpenMP
// schedule must produce the same result as the serial loop.
template <typename Fn>
void parallel_for(std::ptrdiff_t n, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
#endif
}

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace xg
