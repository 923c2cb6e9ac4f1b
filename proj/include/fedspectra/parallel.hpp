#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedspectra {

/// Thread cap read from FEDSPECTRA_THREADS; 0 or unset means the OpenMP default.
int configured_threads();

inline int available_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Runs fn(i) for i in [0, n) on up to `threads` OpenMP threads (1 = serial).
/// Iterations must be independent. An exception from any iteration is rethrown
/// after the loop; the lowest failing index wins.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<std::ptrdiff_t>(n);
    const int nt = threads < 1 ? 1 : threads;
#pragma omp parallel for schedule(dynamic) num_threads(nt) if (nt > 1 && n > 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace fedspectra
