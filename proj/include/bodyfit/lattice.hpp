#ifndef BODYFIT_LATTICE_HPP
#define BODYFIT_LATTICE_HPP

#include <cmath>
#include <cstdint>

#include "bodyfit/cells.hpp"
#include "bodyfit/error.hpp"
#include "bodyfit/geometry.hpp"

namespace bodyfit {

/// Cell-centred Cartesian lattice: point(k) = origin + (k + 1/2) * spacing for k in [lo, hi].
///
/// Interior sampling and the distance cloud share the origin so particles of both
/// sets sit on one common lattice.
template <int D>
struct Lattice {
    Vec<D> origin;
    double spacing = 0.0;
    CellKey<D> lo{};
    CellKey<D> hi{};

    /// Lattice covering `box`, extended by `pad` lattice layers on every side.
    static Lattice covering(const Aabb<D>& box, double spacing, std::int64_t pad = 0) {
        if (!(spacing > 0.0)) throw Error("lattice spacing must be positive");
        Lattice l;
        l.origin = box.min_corner;
        l.spacing = spacing;
        for (int i = 0; i < D; ++i) {
            const double cells = (box.max_corner[i] - box.min_corner[i]) / spacing;
            // Number of cell centres strictly needed to cover the extent (at least one).
            auto n = static_cast<std::int64_t>(std::ceil(cells - 1e-9));
            if (n < 1) n = 1;
            l.lo[i] = -pad;
            l.hi[i] = n - 1 + pad;
        }
        return l;
    }

    Vec<D> point(const CellKey<D>& k) const {
        Vec<D> x;
        for (int i = 0; i < D; ++i) x[i] = origin[i] + (static_cast<double>(k[i]) + 0.5) * spacing;
        return x;
    }

    std::int64_t extent(int axis) const { return hi[axis] - lo[axis] + 1; }

    std::size_t size() const {
        std::size_t n = 1;
        for (int i = 0; i < D; ++i) n *= static_cast<std::size_t>(extent(i));
        return n;
    }

    /// Lattice index of the i-th point in lexicographic order (last axis fastest).
    CellKey<D> index(std::size_t linear) const {
        CellKey<D> k;
        for (int i = D - 1; i >= 0; --i) {
            const auto e = static_cast<std::size_t>(extent(i));
            k[i] = lo[i] + static_cast<std::int64_t>(linear % e);
            linear /= e;
        }
        return k;
    }
};

}  // namespace bodyfit

#endif  // BODYFIT_LATTICE_HPP
