#ifndef BODYFIT_SAMPLING_HPP
#define BODYFIT_SAMPLING_HPP

#include <bit>
#include <cstdint>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/lattice.hpp"
#include "bodyfit/parallel.hpp"
#include "bodyfit/sdf.hpp"
#include "bodyfit/winding.hpp"

namespace bodyfit {

enum class ParticleRole { interior, boundary };

inline std::string_view role_name(ParticleRole r) { return r == ParticleRole::interior ? "interior" : "boundary"; }

template <int D>
struct ParticleSet {
    std::vector<Vec<D>> positions;
    std::vector<double> masses;
    std::vector<Vec<D>> velocity;            ///< momentum velocity v
    std::vector<Vec<D>> advection_velocity;  ///< transport velocity ~v
    double spacing = 0.0;
    ParticleRole role = ParticleRole::interior;

    std::size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    /// Equal-mass particles at rest.
    static ParticleSet at_rest(std::vector<Vec<D>> positions, double mass, double spacing, ParticleRole role) {
        ParticleSet s;
        const std::size_t n = positions.size();
        s.positions = std::move(positions);
        s.masses.assign(n, mass);
        s.velocity.assign(n, Vec<D>{});
        s.advection_velocity.assign(n, Vec<D>{});
        s.spacing = spacing;
        s.role = role;
        return s;
    }

    void clear_velocities() {
        std::fill(velocity.begin(), velocity.end(), Vec<D>{});
        std::fill(advection_velocity.begin(), advection_velocity.end(), Vec<D>{});
    }
};

/// Lattice points of the geometry bounding box whose winding number passes the inside test.
/// Each particle carries mass rho_0 * V / n with V estimated as n * spacing^D.
template <int D>
ParticleSet<D> sample_interior(const Geometry<D>& g, const WindingHierarchy<D>& h, double spacing,
                               double epsilon_w = 0.5, double rho_0 = 1.0) {
    if (!(spacing > 0.0)) throw Error("particle spacing must be positive");
    if (!(epsilon_w > 0.0 && epsilon_w <= 1.0)) throw Error("winding relaxation must lie in (0, 1]");
    const auto lattice = Lattice<D>::covering(geometry_aabb(g), spacing);
    const std::size_t n = lattice.size();
    std::vector<char> inside(n, 0);
    parallel_for(n, [&](std::size_t i) { inside[i] = std::abs(h.winding(lattice.point(lattice.index(i)))) >= epsilon_w; });

    std::vector<Vec<D>> positions;
    for (std::size_t i = 0; i < n; ++i)
        if (inside[i]) positions.push_back(lattice.point(lattice.index(i)));
    if (positions.empty()) throw NumericalError("sample_interior: no lattice point lies inside; resolution too coarse");

    double cell_volume = 1.0;
    for (int i = 0; i < D; ++i) cell_volume *= spacing;
    const double volume = static_cast<double>(positions.size()) * cell_volume;
    const double mass = rho_0 * volume / static_cast<double>(positions.size());
    return ParticleSet<D>::at_rest(std::move(positions), mass, spacing, ParticleRole::interior);
}

/// Boundary particles copied from the cloud points with 0 < phi <= thickness.
template <int D>
ParticleSet<D> sample_boundary(const SignedDistanceCloud<D>& cloud, double thickness, double rho_0 = 1.0,
                               Diagnostics* diag = nullptr) {
    auto positions = boundary_positions(cloud, thickness, diag);
    double mass = rho_0;
    for (int i = 0; i < D; ++i) mass *= cloud.spacing;
    return ParticleSet<D>::at_rest(std::move(positions), mass, cloud.spacing, ParticleRole::boundary);
}

/// Removes boundary particles bitwise coincident with an interior particle.
///
/// Both sets live on one lattice; a point can land in both only where the winding
/// test and the pseudo-normal sign disagree at a surface feature.
template <int D>
std::size_t remove_coincident(ParticleSet<D>& boundary, const ParticleSet<D>& interior) {
    struct Hash {
        std::size_t operator()(const Vec<D>& x) const noexcept {
            std::uint64_t h = 1469598103934665603ull;
            for (int i = 0; i < D; ++i) h = (h ^ std::bit_cast<std::uint64_t>(x[i])) * 1099511628211ull;
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_set<Vec<D>, Hash> occupied(interior.positions.begin(), interior.positions.end());
    ParticleSet<D> kept = boundary;
    kept.positions.clear();
    kept.masses.clear();
    for (std::size_t i = 0; i < boundary.size(); ++i)
        if (!occupied.contains(boundary.positions[i])) {
            kept.positions.push_back(boundary.positions[i]);
            kept.masses.push_back(boundary.masses[i]);
        }
    const std::size_t removed = boundary.size() - kept.size();
    kept.velocity.assign(kept.size(), Vec<D>{});
    kept.advection_velocity.assign(kept.size(), Vec<D>{});
    boundary = std::move(kept);
    return removed;
}

}  // namespace bodyfit

#endif  // BODYFIT_SAMPLING_HPP
