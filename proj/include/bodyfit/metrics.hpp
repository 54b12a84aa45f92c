#ifndef BODYFIT_METRICS_HPP
#define BODYFIT_METRICS_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/packing.hpp"
#include "bodyfit/sampling.hpp"
#include "bodyfit/sph.hpp"

namespace bodyfit {

struct DensityErrors {
    double l2 = 0.0;
    double l_inf = 0.0;
    double deviation_fraction = 0.0;  ///< interior share with |rho - rho_0| / rho_0 above the threshold
};

/// Error norms of interior densities against rho_0 from explicit density values.
inline DensityErrors density_error_norms(std::span<const double> rho, double rho_0, double threshold = 0.01) {
    DensityErrors e;
    if (rho.empty()) return e;
    double sum = 0.0;
    std::size_t deviating = 0;
    for (double r : rho) {
        const double d = std::abs(r - rho_0);
        e.l_inf = std::max(e.l_inf, d);
        sum += d * d;
        deviating += d / rho_0 > threshold;
    }
    e.l2 = std::sqrt(sum / static_cast<double>(rho.size()));
    e.deviation_fraction = static_cast<double>(deviating) / static_cast<double>(rho.size());
    return e;
}

/// Densities of the interior particles, summed over interior and boundary together.
template <int D>
std::vector<double> interior_densities(const ParticleSet<D>& interior, const ParticleSet<D>& boundary,
                                       const QuinticKernel<D>& kernel) {
    std::vector<Vec<D>> pos(interior.positions);
    pos.insert(pos.end(), boundary.positions.begin(), boundary.positions.end());
    std::vector<double> m(interior.masses);
    m.insert(m.end(), boundary.masses.begin(), boundary.masses.end());
    auto rho = density_summation<D>(pos, m, kernel);
    rho.resize(interior.size());
    return rho;
}

template <int D>
DensityErrors density_error_norms(const ParticleSet<D>& interior, const ParticleSet<D>& boundary,
                                  const QuinticKernel<D>& kernel, double rho_0 = 1.0, double threshold = 0.01) {
    const auto rho = interior_densities(interior, boundary, kernel);
    return density_error_norms(std::span<const double>(rho), rho_0, threshold);
}

/// Orders of convergence between consecutive (spacing, error) pairs.
inline std::vector<double> eoc(const std::vector<std::pair<double, double>>& errors) {
    if (errors.size() < 2) throw Error("eoc needs at least two resolutions");
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const auto [dx0, e0] = errors[i];
        const auto [dx1, e1] = errors[i + 1];
        if (!(e0 > 0.0) || !(e1 > 0.0)) throw Error("eoc requires positive error values");
        if (!(dx0 > dx1) || !(dx1 > 0.0)) throw Error("eoc requires strictly decreasing positive spacings");
        out.push_back(std::log(e0 / e1) / std::log(dx0 / dx1));
    }
    return out;
}

struct QualityReport {
    double e_kin = 0.0;
    double e_kin_n = 0.0;
    double l2 = 0.0;
    double l_inf = 0.0;
    double deviation_fraction = 0.0;
    double rho_0 = 1.0;
    std::size_t interior_count = 0;
    std::size_t boundary_count = 0;
    std::size_t iterations = 0;
};

template <int D>
QualityReport quality_report(const PackingState<D>& state, const ConvergenceReport& conv, double rho_0 = 1.0) {
    QualityReport q;
    const auto e = density_error_norms(state.interior, state.boundary, state.kernel, rho_0);
    q.e_kin = conv.final_e_kin;
    q.e_kin_n = conv.final_e_kin_n;
    q.l2 = e.l2;
    q.l_inf = e.l_inf;
    q.deviation_fraction = e.deviation_fraction;
    q.rho_0 = rho_0;
    q.interior_count = state.interior.size();
    q.boundary_count = state.boundary.size();
    q.iterations = conv.iterations;
    return q;
}

}  // namespace bodyfit

#endif  // BODYFIT_METRICS_HPP
