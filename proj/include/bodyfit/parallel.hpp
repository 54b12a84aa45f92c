#ifndef BODYFIT_PARALLEL_HPP
#define BODYFIT_PARALLEL_HPP

#include <cstddef>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bodyfit {

/// Environment variable read by set_thread_count_from_env().
inline constexpr const char* thread_count_env = "BODYFIT_NUM_THREADS";

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

inline void set_thread_count_from_env() {
    if (const char* s = std::getenv(thread_count_env)) {
        try {
            set_thread_count(std::stoi(s));
        } catch (const std::exception&) {
        }
    }
}

/// Runs f(i) for i in [0, n). Iterations must write disjoint outputs.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const auto count = static_cast<long long>(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
    for (long long i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

}  // namespace bodyfit

#endif  // BODYFIT_PARALLEL_HPP
