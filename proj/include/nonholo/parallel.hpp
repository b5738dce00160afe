#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace nonholo {

/// Evaluates fn(0..count-1) in order on the calling thread.
template <class F>
auto map_serial(std::size_t count, F&& fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(fn(i));
  return out;
}

/**
 * Evaluates fn(0..count-1) on up to `jobs` OpenMP threads.  Results are stored
 * by index, so the output matches map_serial whenever fn is deterministic.
 * The first exception (by index) is rethrown after the loop.
 */
template <class F>
auto map_parallel(std::size_t count, F&& fn, int jobs) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  const long n = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs > 0 ? jobs : 1)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// Serial for jobs <= 1, parallel otherwise.
template <class F>
auto map_indices(std::size_t count, F&& fn, int jobs) {
  if (jobs <= 1) return map_serial(count, fn);
  return map_parallel(count, fn, jobs);
}

}  // namespace nonholo
