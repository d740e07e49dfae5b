#pragma once

#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixbddc {

/// Serial execution is the reference path; Parallel fans independent
/// per-subdomain (or per-pair) work out over OpenMP threads. Results are
/// written into per-index slots and reduced in index order afterwards, so the
/// two paths produce bitwise identical output.
enum class Execution { Serial, Parallel };

template <class Fn>
void for_each_index(Execution exec, int count, Fn&& fn) {
  if (exec == Execution::Serial || count < 2) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mixbddc
