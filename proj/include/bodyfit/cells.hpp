#ifndef BODYFIT_CELLS_HPP
#define BODYFIT_CELLS_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

#include "bodyfit/vec.hpp"

namespace bodyfit {

template <int D>
using CellKey = std::array<std::int64_t, D>;

template <int D>
struct CellKeyHash {
    std::size_t operator()(const CellKey<D>& k) const noexcept {
        // Large odd multipliers per axis, then a final avalanche.
        constexpr std::uint64_t primes[3] = {73856093ull, 19349663ull, 83492791ull};
        std::uint64_t h = 0;
        for (int i = 0; i < D; ++i) h ^= static_cast<std::uint64_t>(k[i]) * primes[i] * 0x9e3779b97f4a7c15ull;
        h ^= h >> 31;
        h *= 0xbf58476d1ce4e5b9ull;
        h ^= h >> 27;
        return static_cast<std::size_t>(h);
    }
};

/// Integer cell of x in a grid of cell size `cell_size` anchored at the origin.
template <int D>
CellKey<D> cell_coordinates(const Vec<D>& x, double cell_size) {
    CellKey<D> c;
    for (int i = 0; i < D; ++i) c[i] = static_cast<std::int64_t>(std::floor(x[i] / cell_size));
    return c;
}

/// Calls f(key) for every cell in the closed integer box [lo, hi].
template <int D, typename F>
void for_each_cell_in_box(const CellKey<D>& lo, const CellKey<D>& hi, F&& f) {
    CellKey<D> c = lo;
    while (true) {
        f(c);
        int axis = 0;
        while (axis < D) {
            if (++c[axis] <= hi[axis]) break;
            c[axis] = lo[axis];
            ++axis;
        }
        if (axis == D) return;
    }
}

/// Calls f(key) for the 3^D cells with Chebyshev distance <= 1 from `center`.
template <int D, typename F>
void for_each_neighbor_cell(const CellKey<D>& center, F&& f) {
    CellKey<D> lo = center, hi = center;
    for (int i = 0; i < D; ++i) {
        --lo[i];
        ++hi[i];
    }
    for_each_cell_in_box<D>(lo, hi, std::forward<F>(f));
}

}  // namespace bodyfit

#endif  // BODYFIT_CELLS_HPP
