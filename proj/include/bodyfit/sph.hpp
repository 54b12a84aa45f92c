#ifndef BODYFIT_SPH_HPP
#define BODYFIT_SPH_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/kernels.hpp"
#include "bodyfit/neighbors.hpp"
#include "bodyfit/parallel.hpp"

namespace bodyfit {

/// Per-particle neighbor lists (self included) for a fixed interaction radius.
///
/// Lists are gathered with radius + skin from a cell list and reused until some
/// particle has moved more than skin / 2 since the last gather, so every pair within
/// the radius is always present.
template <int D>
class ParticleNeighbors {
public:
    ParticleNeighbors() = default;
    ParticleNeighbors(double radius, double skin) : radius_(radius), skin_(skin) {
        if (!(radius > 0.0) || !(skin >= 0.0)) throw Error("neighbor radius must be positive");
    }

    double radius() const { return radius_; }
    std::size_t rebuilds() const { return rebuilds_; }

    /// Brings the lists up to date for `positions`; returns true if they were regathered.
    bool update(std::span<const Vec<D>> positions) {
        if (!stale(positions)) return false;
        const double reach = radius_ + skin_;
        const double reach2 = reach * reach;
        cells_.rebuild(positions, reach);
        const std::size_t n = positions.size();
        std::vector<std::vector<std::uint32_t>> lists(n);
        parallel_for(n, [&](std::size_t i) {
            auto& l = lists[i];
            const Vec<D> x = positions[i];
            cells_.for_each_candidate(x, [&](std::size_t j, const Vec<D>& y) {
                if (squared_norm(x - y) < reach2) l.push_back(static_cast<std::uint32_t>(j));
            });
        });
        offsets_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + lists[i].size();
        indices_.resize(offsets_[n]);
        parallel_for(n, [&](std::size_t i) { std::copy(lists[i].begin(), lists[i].end(), indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[i])); });
        reference_.assign(positions.begin(), positions.end());
        ++rebuilds_;
        return true;
    }

    /// Candidate neighbors of i; callers filter by the exact radius.
    std::span<const std::uint32_t> candidates(std::size_t i) const {
        return {indices_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
    }

    std::size_t size() const { return reference_.size(); }

private:
    bool stale(std::span<const Vec<D>> positions) const {
        if (rebuilds_ == 0 || positions.size() != reference_.size()) return true;
        const double limit = 0.25 * skin_ * skin_;
        for (std::size_t i = 0; i < positions.size(); ++i)
            if (!(squared_norm(positions[i] - reference_[i]) <= limit)) return true;
        return false;
    }

    double radius_ = 1.0;
    double skin_ = 0.0;
    std::size_t rebuilds_ = 0;
    CellList<D> cells_;
    std::vector<Vec<D>> reference_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> indices_;
};

/// rho_i = sum_j m_j W(r_i - r_j) over all particles, self term included.
template <int D>
void density_summation(std::span<const Vec<D>> positions, std::span<const double> masses, const QuinticKernel<D>& kernel,
                       const ParticleNeighbors<D>& nb, std::vector<double>& rho) {
    const double r2 = kernel.compact_support() * kernel.compact_support();
    rho.resize(positions.size());
    parallel_for(positions.size(), [&](std::size_t i) {
        double s = 0.0;
        for (auto j : nb.candidates(i)) {
            const double d2 = squared_norm(positions[i] - positions[j]);
            if (d2 < r2) s += masses[j] * kernel.value(std::sqrt(d2));
        }
        rho[i] = s;
    });
}

template <int D>
std::vector<double> density_summation(std::span<const Vec<D>> positions, std::span<const double> masses,
                                      const QuinticKernel<D>& kernel) {
    if (positions.size() != masses.size()) throw Error("density_summation: positions and masses differ in length");
    ParticleNeighbors<D> nb(kernel.compact_support(), 0.0);
    nb.update(positions);
    std::vector<double> rho;
    density_summation(positions, masses, kernel, nb, rho);
    return rho;
}

/// Background-pressure acceleration a_i = -(2 p_b / rho_i) sum_j (m_j / rho_j) grad W_ij.
template <int D>
void packing_acceleration(std::span<const Vec<D>> positions, std::span<const double> masses,
                          std::span<const double> rho, const QuinticKernel<D>& kernel, double background_pressure,
                          const ParticleNeighbors<D>& nb, std::vector<Vec<D>>& accel) {
    const double r2 = kernel.compact_support() * kernel.compact_support();
    accel.resize(positions.size());
    parallel_for(positions.size(), [&](std::size_t i) {
        Vec<D> s{};
        for (auto j : nb.candidates(i)) {
            const Vec<D> r = positions[i] - positions[j];
            const double d2 = squared_norm(r);
            if (d2 < r2 && d2 > 0.0) {
                const double d = std::sqrt(d2);
                s += r * (masses[j] / rho[j] * kernel.radial_derivative(d) / d);
            }
        }
        accel[i] = background_pressure * (s * (-2.0 / rho[i]));
    });
}

template <int D>
std::vector<Vec<D>> packing_acceleration(std::span<const Vec<D>> positions, std::span<const double> masses,
                                         const QuinticKernel<D>& kernel, double background_pressure) {
    if (positions.size() != masses.size()) throw Error("packing_acceleration: positions and masses differ in length");
    ParticleNeighbors<D> nb(kernel.compact_support(), 0.0);
    nb.update(positions);
    std::vector<double> rho;
    density_summation(positions, masses, kernel, nb, rho);
    std::vector<Vec<D>> a;
    packing_acceleration<D>(positions, masses, rho, kernel, background_pressure, nb, a);
    return a;
}

}  // namespace bodyfit

#endif  // BODYFIT_SPH_HPP
