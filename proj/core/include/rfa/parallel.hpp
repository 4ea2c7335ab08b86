#pragma once

#include <cstddef>
#include <vector>

namespace rfa {

/// Worker count for a kernel: `requested` if positive, else the OpenMP
/// default, capped by the RFA_THREADS environment variable when set.
int resolve_threads(int requested = 0);

/// Sums `partial(slab)` over slabs 0..count-1 in slab order. The slab
/// decomposition is fixed, so the result is bit-identical for any thread count.
template <class F>
double ordered_slab_sum(int count, int threads, F&& partial) {
  std::vector<double> sums(static_cast<std::size_t>(count), 0.0);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int s = 0; s < count; ++s) sums[static_cast<std::size_t>(s)] = partial(s);
  double total = 0.0;
  for (double v : sums) total += v;
  return total;
}

}  // namespace rfa
