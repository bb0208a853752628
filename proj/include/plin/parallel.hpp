#pragma once

namespace plin {

// Applies the PLIN_THREADS cap (if the env var is set) to the OpenMP runtime.
// First call wins; later calls are no-ops.
void apply_thread_cap();

// Number of threads the parallel kernels will use after the cap.
int worker_count();

}  // namespace plin
