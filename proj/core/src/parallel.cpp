#include "rfa/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace rfa {

int resolve_threads(int requested) {
  int n = requested > 0 ? requested : omp_get_max_threads();
  if (const char* cap = std::getenv("RFA_THREADS")) {
    try {
      const int limit = std::stoi(cap);
      if (limit > 0) n = std::min(n, limit);
    } catch (const std::exception&) {
      // unparsable cap is ignored
    }
  }
  return std::max(1, n);
}

}  // namespace rfa
