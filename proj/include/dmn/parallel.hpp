#pragma once

#include <algorithm>
#include <atomic>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dmn {

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{0};
  return cap;
}
}  // namespace detail

/// Caps the number of worker threads used by parallel kernels; 0 means
/// "whatever the runtime offers", 1 forces serial execution.
inline void set_max_threads(int n) { detail::thread_cap().store(std::max(0, n)); }

inline int max_threads() {
  int cap = detail::thread_cap().load();
#if defined(_OPENMP)
  return cap == 0 ? omp_get_max_threads() : cap;
#else
  return 1;
#endif
}

}  // namespace dmn
