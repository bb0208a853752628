#include "plin/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace plin {

namespace {

int resolve_cap() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
#else
  int n = 1;
#endif
  if (const char* env = std::getenv("PLIN_THREADS")) {
    try {
      int cap = std::stoi(env);
      if (cap >= 1 && cap < n) n = cap;
    } catch (...) {
      // unparsable value: keep the runtime default
    }
  }
  return n;
}

}  // namespace

void apply_thread_cap() {
  static const int applied = [] {
    int n = resolve_cap();
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    return n;
  }();
  (void)applied;
}

int worker_count() {
  apply_thread_cap();
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace plin
