#pragma once

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ws {

// Every parallel loop in this project writes disjoint output slots and does
// any floating-point reduction serially afterwards, so results are identical
// for every thread count (including 1).
template <typename Body>
void parallel_for(std::int64_t n, Body&& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        body(i);
    }
#else
    for (std::int64_t i = 0; i < n; ++i) {
        body(i);
    }
#endif
}

inline int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace ws
