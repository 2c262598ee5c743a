#pragma once

#include <cstddef>
#include <exception>
#include <type_traits>
#include <vector>

#include "jumpflow/types.hpp"

namespace jumpflow {

void set_thread_count(int threads);
int thread_count();

// Runs fn(i) for i in [0, count). Iterations must be independent. The
// first exception in index order is rethrown after the loop.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn, Exec exec) {
  const auto n = static_cast<long long>(count);
  if (exec == Exec::serial) {
    for (long long i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
    return;
  }
  std::vector<std::exception_ptr> errors;
  bool failed = false;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(jumpflow_parallel_for)
      {
        if (errors.empty()) errors.resize(count);
        errors[static_cast<std::size_t>(i)] = std::current_exception();
        failed = true;
      }
    }
  }
  if (failed) {
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
}

// Per-index results, stored by index so any reduction done afterwards in
// index order is independent of the thread count.
template <class Fn>
auto ensemble_map(std::size_t count, Fn&& fn, Exec exec)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, std::size_t>> out(count);
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  const auto n = static_cast<long long>(count);
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 4)
  for (long long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace jumpflow
