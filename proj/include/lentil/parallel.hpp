#pragma once

#include <cstddef>
#include <functional>

namespace lentil {

// Thread cap used by parallel_for. Defaults to LENTIL_THREADS from the
// environment, else the hardware concurrency.
int thread_cap();
void set_thread_cap(int n);

// Runs body(i) for i in [0, n). Iterations must be independent; results are
// written by index so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lentil
