#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flexprice::exec {

// Execution policy for the batch kernels (per-timestep power flows,
// sensitivity batches, per-agent solve fan-out). Serial is the reference
// path; Parallel dispatches the same loop body through OpenMP. Both paths
// must produce bit-identical results: every item writes only its own slot
// and reductions happen outside the parallel region in fixed order.
enum class Mode { Serial, Parallel };

template <typename Fn>
void parallel_for(Mode mode, int n, const Fn& body) {
  if (mode == Mode::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
    return;
#endif
  }
  for (int i = 0; i < n; ++i) body(i);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace flexprice::exec
