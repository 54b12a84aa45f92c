#ifndef BODYFIT_PACKING_HPP
#define BODYFIT_PACKING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/integrator.hpp"
#include "bodyfit/kernels.hpp"
#include "bodyfit/neighbors.hpp"
#include "bodyfit/sampling.hpp"
#include "bodyfit/sdf.hpp"
#include "bodyfit/sph.hpp"

namespace bodyfit {

/// midpoint keeps interior particles half a spacing inside the surface; on_surface lets them reach it.
enum class PlacementMode { midpoint, on_surface };

inline std::string_view placement_name(PlacementMode m) { return m == PlacementMode::midpoint ? "midpoint" : "on_surface"; }

inline PlacementMode parse_placement(std::string_view s) {
    if (s == "midpoint") return PlacementMode::midpoint;
    if (s == "on_surface") return PlacementMode::on_surface;
    throw Error("unknown placement mode '" + std::string(s) + "' (expected midpoint or on_surface)");
}

struct PackingConfig {
    double background_pressure = 1.0;
    double smoothing_length_factor = 0.8;
    double boundary_thickness = 0.0;  ///< tau, absolute length
    std::size_t max_iterations = 1000;
    double abs_tolerance = 1e-6;
    double rel_tolerance = 1e-3;
    RungeKuttaScheme scheme = RungeKuttaScheme::bogacki_shampine_3_2;
    PlacementMode placement = PlacementMode::midpoint;
    bool terminate_on_energy_plateau = false;
    std::size_t plateau_window = 50;
    double plateau_tolerance = 1e-3;

    void validate() const {
        if (!(background_pressure > 0.0)) throw Error("background pressure must be positive");
        if (!(smoothing_length_factor > 0.0)) throw Error("smoothing length factor must be positive");
        if (!(boundary_thickness >= 0.0)) throw Error("boundary thickness must be non-negative");
        if (!(abs_tolerance > 0.0) || !(rel_tolerance >= 0.0)) throw Error("integrator tolerances must be positive");
        if (plateau_window == 0) throw Error("plateau window must be positive");
    }
};

/// Kernel-weighted lookup of (phi, n) from a signed distance cloud.
template <int D>
class CloudInterpolator {
public:
    CloudInterpolator(const SignedDistanceCloud<D>& cloud, const QuinticKernel<D>& kernel)
        : cloud_(&cloud), kernel_(kernel), cells_(std::span<const Vec<D>>(cloud.positions), kernel.compact_support()) {}

    ShepardResult<D> operator()(const Vec<D>& x) const {
        const double r2 = kernel_.compact_support() * kernel_.compact_support();
        ShepardAccumulator<D> acc;
        cells_.for_each_candidate(x, [&](std::size_t j, const Vec<D>& y) {
            const double d2 = squared_norm(x - y);
            if (d2 < r2) acc.add(kernel_.value(std::sqrt(d2)), cloud_->phi[j], cloud_->normals[j]);
        });
        return acc.finish();
    }

    const QuinticKernel<D>& kernel() const { return kernel_; }

private:
    const SignedDistanceCloud<D>* cloud_;
    QuinticKernel<D> kernel_;
    CellList<D> cells_;
};

/// Distance to move against the normal, or nullopt when the interior particle stays put.
inline std::optional<double> interior_correction(double phi, double spacing, PlacementMode mode) {
    if (mode == PlacementMode::midpoint) {
        if (phi >= -0.5 * spacing) return phi + 0.5 * spacing;
    } else if (phi >= 0.0) {
        return phi;
    }
    return std::nullopt;
}

/// Distance to move against the normal for a boundary particle (negative moves outward).
inline std::optional<double> boundary_correction(double phi, double thickness, double spacing, PlacementMode mode) {
    const double outer_trigger = mode == PlacementMode::midpoint ? thickness + 0.5 * spacing : thickness + spacing;
    const double outer_target = mode == PlacementMode::midpoint ? thickness : thickness + 0.5 * spacing;
    const double inner = mode == PlacementMode::midpoint ? 0.5 * spacing : spacing;
    if (phi >= outer_trigger) return phi - outer_target;
    if (phi < inner) return phi - inner;
    return std::nullopt;
}

struct BoundingStats {
    std::size_t projected = 0;
    std::size_t zero_normal = 0;
    std::size_t empty_support = 0;
};

namespace detail {

template <int D, typename Rule>
BoundingStats apply_bounding(ParticleSet<D>& p, const CloudInterpolator<D>& interp, Rule&& rule) {
    const std::size_t n = p.size();
    std::vector<char> status(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const auto s = interp(p.positions[i]);
        if (s.status == ShepardStatus::empty_support) {
            status[i] = 2;
            return;
        }
        if (s.status == ShepardStatus::zero_normal) {
            status[i] = 3;
            return;
        }
        if (const auto d = rule(s.phi)) {
            p.positions[i] -= *d * s.normal;
            status[i] = 1;
        }
    });
    BoundingStats st;
    for (char c : status) {
        st.projected += c == 1;
        st.empty_support += c == 2;
        st.zero_normal += c == 3;
    }
    return st;
}

}  // namespace detail

template <int D>
BoundingStats apply_bounding_interior(ParticleSet<D>& p, const CloudInterpolator<D>& interp, double spacing,
                                      PlacementMode mode = PlacementMode::midpoint) {
    return detail::apply_bounding(p, interp, [&](double phi) { return interior_correction(phi, spacing, mode); });
}

template <int D>
BoundingStats apply_bounding_boundary(ParticleSet<D>& p, const CloudInterpolator<D>& interp, double thickness,
                                      double spacing, PlacementMode mode = PlacementMode::midpoint) {
    return detail::apply_bounding(p, interp,
                                  [&](double phi) { return boundary_correction(phi, thickness, spacing, mode); });
}

template <int D>
struct PackingState {
    ParticleSet<D> interior;
    ParticleSet<D> boundary;
    SignedDistanceCloud<D> cloud;
    QuinticKernel<D> kernel;
    std::size_t iteration = 0;
    std::vector<double> energy_history;

    PackingState(ParticleSet<D> interior_set, ParticleSet<D> boundary_set, SignedDistanceCloud<D> sdf, double h)
        : interior(std::move(interior_set)), boundary(std::move(boundary_set)), cloud(std::move(sdf)), kernel(h) {}
};

struct EnergyRecord {
    std::size_t iteration = 0;
    double e_kin = 0.0;
    double e_kin_n = 0.0;
    double dt = 0.0;
    std::size_t projected_interior = 0;
    std::size_t projected_boundary = 0;
};

struct ConvergenceReport {
    std::size_t iterations = 0;
    double final_e_kin = 0.0;
    double final_e_kin_n = 0.0;
    double max_e_kin = 0.0;
    bool plateau_reached = false;
    std::size_t projected_interior = 0;
    std::size_t projected_boundary = 0;
    std::size_t zero_normal_events = 0;
    std::size_t rejected_steps = 0;
    std::size_t rhs_evaluations = 0;
    std::size_t neighbor_rebuilds = 0;
    std::vector<EnergyRecord> records;
};

template <int D>
double kinetic_energy(const ParticleSet<D>& p) {
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e += p.masses[i] * squared_norm(p.advection_velocity[i]);
    return 0.5 * e;
}

/// True when the mean of the last `window` values differs from the mean of the window
/// before it by less than `tolerance` relative.
inline bool energy_plateau(std::span<const double> series, std::size_t window, double tolerance) {
    if (window == 0 || series.size() < 2 * window) return false;
    double recent = 0.0, earlier = 0.0;
    const std::size_t n = series.size();
    for (std::size_t i = 0; i < window; ++i) {
        recent += series[n - 1 - i];
        earlier += series[n - 1 - window - i];
    }
    if (earlier == 0.0) return recent == 0.0;
    return std::abs(recent - earlier) / std::abs(earlier) < tolerance;
}

/// Initial state from sampled sets with h = factor * interior spacing.
template <int D>
PackingState<D> make_packing_state(ParticleSet<D> interior, ParticleSet<D> boundary, SignedDistanceCloud<D> cloud,
                                   const PackingConfig& cfg) {
    cfg.validate();
    if (!(interior.spacing > 0.0)) throw Error("interior particle spacing must be positive");
    const double h = cfg.smoothing_length_factor * interior.spacing;
    return PackingState<D>(std::move(interior), std::move(boundary), std::move(cloud), h);
}

using IterationCallback = std::function<void(const EnergyRecord&)>;

/// Transport-velocity relaxation of interior and boundary particles.
///
/// Every iteration starts from zero velocities, takes one accepted adaptive step of
/// r' = v~, v~' = a_p over the union of both sets, records the interior kinetic energy and
/// then projects both sets back into their bands.
template <int D>
ConvergenceReport pack(PackingState<D>& state, const PackingConfig& cfg, const IterationCallback& on_iteration = {}) {
    cfg.validate();
    const std::size_t ni = state.interior.size();
    const std::size_t nb = state.boundary.size();
    const std::size_t n = ni + nb;
    const auto dim = static_cast<std::size_t>(D);
    if (ni == 0) throw Error("pack: interior particle set is empty");

    std::vector<double> masses(n);
    std::copy(state.interior.masses.begin(), state.interior.masses.end(), masses.begin());
    std::copy(state.boundary.masses.begin(), state.boundary.masses.end(), masses.begin() + static_cast<std::ptrdiff_t>(ni));

    const QuinticKernel<D>& kernel = state.kernel;
    const CloudInterpolator<D> interp(state.cloud, kernel);
    ParticleNeighbors<D> neighbors(kernel.compact_support(), 0.15 * kernel.compact_support());
    std::vector<Vec<D>> pos(n), accel;
    std::vector<double> rho;

    auto rhs = [&](const std::vector<double>& y, std::vector<double>& dy) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dim; ++c) pos[i][c] = y[i * dim + c];
        neighbors.update(pos);
        density_summation<D>(pos, masses, kernel, neighbors, rho);
        packing_acceleration<D>(pos, masses, rho, kernel, cfg.background_pressure, neighbors, accel);
        const std::size_t off = n * dim;
        for (std::size_t k = 0; k < off; ++k) dy[k] = y[off + k];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dim; ++c) dy[off + i * dim + c] = accel[i][c];
    };

    AdaptiveIntegrator integrator(cfg.scheme, cfg.abs_tolerance, cfg.rel_tolerance);
    std::vector<double> y0(2 * n * dim), y1;
    ConvergenceReport report;
    double max_energy = 0.0;
    for (double e : state.energy_history) max_energy = std::max(max_energy, e);
    std::vector<double> normalized;

    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        state.interior.clear_velocities();
        state.boundary.clear_velocities();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec<D>& x = i < ni ? state.interior.positions[i] : state.boundary.positions[i - ni];
            for (std::size_t c = 0; c < dim; ++c) {
                y0[i * dim + c] = x[c];
                y0[(n + i) * dim + c] = 0.0;
            }
        }

        const StepOutcome step = integrator.step(rhs, y0, y1);
        report.rejected_steps += static_cast<std::size_t>(step.rejected);
        report.rhs_evaluations += static_cast<std::size_t>(step.evaluations);

        for (std::size_t i = 0; i < n; ++i) {
            Vec<D> x, v;
            for (std::size_t c = 0; c < dim; ++c) {
                x[c] = y1[i * dim + c];
                v[c] = y1[(n + i) * dim + c];
            }
            if (!all_finite(x) || !all_finite(v)) {
                const bool interior = i < ni;
                throw NumericalError("pack: non-finite state of " + std::string(interior ? "interior" : "boundary") +
                                     " particle " + std::to_string(interior ? i : i - ni) + " at iteration " +
                                     std::to_string(state.iteration + 1));
            }
            auto& set = i < ni ? state.interior : state.boundary;
            const std::size_t k = i < ni ? i : i - ni;
            set.positions[k] = x;
            set.advection_velocity[k] = v;
        }

        const double e = kinetic_energy(state.interior);
        max_energy = std::max(max_energy, e);
        const double en = max_energy > 0.0 ? e / max_energy : 0.0;

        const auto bi = apply_bounding_interior(state.interior, interp, state.interior.spacing, cfg.placement);
        BoundingStats bb;
        if (nb > 0)
            bb = apply_bounding_boundary(state.boundary, interp, cfg.boundary_thickness, state.boundary.spacing,
                                         cfg.placement);

        ++state.iteration;
        state.energy_history.push_back(e);
        normalized.push_back(en);
        EnergyRecord rec{state.iteration, e, en, step.dt, bi.projected, bb.projected};
        report.records.push_back(rec);
        report.projected_interior += bi.projected;
        report.projected_boundary += bb.projected;
        report.zero_normal_events += bi.zero_normal + bb.zero_normal;
        if (on_iteration) on_iteration(rec);

        if (cfg.terminate_on_energy_plateau && energy_plateau(normalized, cfg.plateau_window, cfg.plateau_tolerance)) {
            report.plateau_reached = true;
            break;
        }
    }

    report.iterations = report.records.size();
    report.max_e_kin = max_energy;
    if (!report.records.empty()) {
        report.final_e_kin = report.records.back().e_kin;
        report.final_e_kin_n = report.records.back().e_kin_n;
    }
    report.neighbor_rebuilds = neighbors.rebuilds();
    return report;
}

/// Interpolated distances of both sets after packing.
struct ContainmentReport {
    double max_interior_phi = -std::numeric_limits<double>::infinity();
    double min_boundary_phi = std::numeric_limits<double>::infinity();
    double max_boundary_phi = -std::numeric_limits<double>::infinity();
    std::size_t interior_violations = 0;
    std::size_t boundary_violations = 0;
    std::size_t unsupported = 0;  ///< particles with no cloud point in reach (deep interior)
};

template <int D>
ContainmentReport measure_containment(const PackingState<D>& state, double thickness, double tolerance,
                                      PlacementMode mode = PlacementMode::midpoint) {
    const CloudInterpolator<D> interp(state.cloud, state.kernel);
    ContainmentReport r;
    const double dx = state.interior.spacing;
    const double interior_limit = (mode == PlacementMode::midpoint ? -0.5 * dx : 0.0) + tolerance;
    for (const auto& x : state.interior.positions) {
        const auto s = interp(x);
        if (s.status == ShepardStatus::empty_support) {
            ++r.unsupported;
            continue;
        }
        r.max_interior_phi = std::max(r.max_interior_phi, s.phi);
        r.interior_violations += s.phi > interior_limit;
    }
    const double dxb = state.boundary.spacing;
    const double lower = (mode == PlacementMode::midpoint ? 0.5 * dxb : dxb) - tolerance;
    const double upper = thickness + (mode == PlacementMode::midpoint ? 0.0 : 0.5 * dxb) + tolerance;
    for (const auto& x : state.boundary.positions) {
        const auto s = interp(x);
        if (s.status == ShepardStatus::empty_support) {
            ++r.unsupported;
            ++r.boundary_violations;
            continue;
        }
        r.min_boundary_phi = std::min(r.min_boundary_phi, s.phi);
        r.max_boundary_phi = std::max(r.max_boundary_phi, s.phi);
        r.boundary_violations += s.phi < lower || s.phi > upper;
    }
    return r;
}

}  // namespace bodyfit

#endif  // BODYFIT_PACKING_HPP
