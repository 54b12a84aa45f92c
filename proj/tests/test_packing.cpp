#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bodyfit/face_grid.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/packing.hpp"
#include "bodyfit/shapes.hpp"
#include "bodyfit/winding.hpp"
#include "test_support.hpp"

using namespace bodyfit;

namespace {

/// Lattice points k * dx within `radius` of the origin.
template <int D>
std::vector<Vec<D>> lattice_patch(double dx, double radius) {
    std::vector<Vec<D>> out;
    const int n = static_cast<int>(std::ceil(radius / dx));
    std::array<int, 3> k{};
    const int dims = D;
    for (k[0] = -n; k[0] <= n; ++k[0])
        for (k[1] = -n; k[1] <= n; ++k[1])
            for (k[2] = (dims == 3 ? -n : 0); k[2] <= (dims == 3 ? n : 0); ++k[2]) {
                Vec<D> x;
                for (int i = 0; i < D; ++i) x[i] = k[static_cast<std::size_t>(i)] * dx;
                if (norm(x) <= radius) out.push_back(x);
            }
    return out;
}

std::size_t index_of_origin(const auto& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (norm(pts[i]) == 0.0) return i;
    return pts.size();
}

/// A unit circle sampled the way the pipeline does it.
struct CircleFixture {
    Geometry<2> geometry = shapes::circle(1.0, 200);
    double dx = 0.1;
    double tau = 0.4;
    PackingConfig cfg;

    PackingState<2> state(bool with_boundary = true) const {
        const double h = cfg.smoothing_length_factor * dx;
        const double band = std::max({3.0 * h, tau + dx, tau + 0.5 * dx + 3.0 * h});
        const FaceGrid<2> grid(geometry, band);
        auto cloud = build_sdf(geometry, grid, dx, band);
        const WindingHierarchy<2> tree(geometry);
        auto interior = sample_interior(geometry, tree, dx);
        auto boundary = with_boundary ? sample_boundary(cloud, tau)
                                      : ParticleSet<2>::at_rest({}, 0.0, dx, ParticleRole::boundary);
        remove_coincident(boundary, interior);
        return make_packing_state(std::move(interior), std::move(boundary), std::move(cloud), cfg);
    }

    CircleFixture() {
        cfg.boundary_thickness = tau;
        cfg.max_iterations = 200;
    }
};

/// A cloud with one far-away point, so every particle has empty interpolation support.
SignedDistanceCloud<2> remote_cloud(double dx) {
    SignedDistanceCloud<2> c;
    c.positions = {{1e3, 1e3}};
    c.phi = {1.0};
    c.normals = {{1.0, 0.0}};
    c.band_radius = 1.0;
    c.spacing = dx;
    return c;
}

}  // namespace

TEST(Density, IsolatedParticleSeesOnlyItself) {
    const QuinticKernel<2> k(0.1);
    const std::vector<Vec2> x{{0, 0}, {1, 0}};
    const std::vector<double> m{2.0, 3.0};
    const auto rho = density_summation<2>(x, m, k);
    EXPECT_DOUBLE_EQ(rho[0], 2.0 * k.value(0.0));
    EXPECT_DOUBLE_EQ(rho[1], 3.0 * k.value(0.0));
}

TEST(Density, UniformLatticeRecoversReferenceDensity) {
    const double dx = 0.1, h = 1.2 * dx;
    {
        const auto pts = lattice_patch<2>(dx, 7 * h);
        const std::vector<double> m(pts.size(), dx * dx);
        const auto rho = density_summation<2>(pts, m, QuinticKernel<2>(h));
        EXPECT_NEAR(rho[index_of_origin(pts)], 1.0, 5e-3);
    }
    {
        const auto pts = lattice_patch<3>(dx, 7 * h);
        const std::vector<double> m(pts.size(), dx * dx * dx);
        const auto rho = density_summation<3>(pts, m, QuinticKernel<3>(h));
        EXPECT_NEAR(rho[index_of_origin(pts)], 1.0, 5e-3);
    }
}

TEST(Density, LinearInMass) {
    std::mt19937_64 rng(3);
    std::vector<Vec2> x;
    for (int i = 0; i < 200; ++i) x.push_back(test::random_point<2>(rng, 0.0, 1.0));
    std::vector<double> m(x.size()), m2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        m[i] = 0.5 + 0.001 * static_cast<double>(i);
        m2[i] = 2.0 * m[i];
    }
    const QuinticKernel<2> k(0.08);
    const auto a = density_summation<2>(x, m, k), b = density_summation<2>(x, m2, k);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(b[i], 2.0 * a[i], 1e-12 * a[i]);
}

TEST(Acceleration, VanishesAtSymmetricLatticeCenter) {
    const double dx = 0.1, h = 0.8 * dx;
    const auto pts = lattice_patch<2>(dx, 7 * h);
    const std::vector<double> m(pts.size(), dx * dx);
    const QuinticKernel<2> k(h);
    const auto a = packing_acceleration<2>(pts, m, k, 1.0);
    const auto rho = density_summation<2>(pts, m, k);
    const std::size_t c = index_of_origin(pts);
    EXPECT_LE(norm(a[c]), 1e-10 / (rho[c] * h));
}

TEST(Acceleration, TwoParticlesPushApartSymmetrically) {
    const QuinticKernel<3> k(0.1);
    const std::vector<Vec3> x{{0, 0, 0}, {0.05, 0.02, -0.01}};
    const std::vector<double> m{1e-3, 1e-3};
    const auto a = packing_acceleration<3>(x, m, k, 1.0);
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[0][c], -a[1][c], 1e-12 * norm(a[0]));
    // Background pressure is repulsive.
    EXPECT_LT(dot(a[0], x[1] - x[0]), 0.0);
}

TEST(Acceleration, LinearInBackgroundPressure) {
    std::mt19937_64 rng(9);
    std::vector<Vec2> x;
    for (int i = 0; i < 150; ++i) x.push_back(test::random_point<2>(rng, 0.0, 1.0));
    const std::vector<double> m(x.size(), 0.01);
    const QuinticKernel<2> k(0.1);
    const auto a1 = packing_acceleration<2>(x, m, k, 1.0), a10 = packing_acceleration<2>(x, m, k, 10.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (int c = 0; c < 2; ++c) EXPECT_EQ(a10[i][c], 10.0 * a1[i][c]);
}

TEST(Acceleration, TotalMomentumChangeIsZero) {
    std::mt19937_64 rng(21);
    std::vector<Vec2> x;
    std::vector<double> m;
    std::uniform_real_distribution<double> mass(0.005, 0.02);
    for (int i = 0; i < 300; ++i) {
        x.push_back(test::random_point<2>(rng, 0.0, 1.0));
        m.push_back(mass(rng));
    }
    const auto a = packing_acceleration<2>(x, m, QuinticKernel<2>(0.06), 1.0);
    Vec2 total{};
    for (std::size_t i = 0; i < x.size(); ++i) total += m[i] * a[i];
    EXPECT_LE(norm(total), 1e-10);
}

TEST(Bounding, InteriorBranches) {
    const double dx = 0.1;
    EXPECT_DOUBLE_EQ(*interior_correction(0.0, dx, PlacementMode::midpoint), 0.05);
    EXPECT_DOUBLE_EQ(*interior_correction(-0.05, dx, PlacementMode::midpoint), 0.0);
    EXPECT_FALSE(interior_correction(-dx, dx, PlacementMode::midpoint));
    EXPECT_FALSE(interior_correction(-0.02, dx, PlacementMode::on_surface));
    EXPECT_DOUBLE_EQ(*interior_correction(0.03, dx, PlacementMode::on_surface), 0.03);
}

TEST(Bounding, BoundaryBranches) {
    const double dx = 0.1, tau = 0.4;
    // Beyond the outer trigger: back to tau.
    EXPECT_NEAR(*boundary_correction(tau + dx, tau, dx, PlacementMode::midpoint), dx, 1e-15);
    // On the surface: out to half a spacing.
    EXPECT_DOUBLE_EQ(*boundary_correction(0.0, tau, dx, PlacementMode::midpoint), -0.05);
    for (double phi : {0.05, tau / 2, tau, tau + 0.049}) EXPECT_FALSE(boundary_correction(phi, tau, dx, PlacementMode::midpoint)) << phi;
    EXPECT_NEAR(*boundary_correction(tau + dx, tau, dx, PlacementMode::on_surface), 0.5 * dx, 1e-15);
    EXPECT_NEAR(*boundary_correction(0.05, tau, dx, PlacementMode::on_surface), -0.05, 1e-15);
    EXPECT_FALSE(boundary_correction(tau + 0.09, tau, dx, PlacementMode::on_surface));
}

TEST(Bounding, FlatWallProjectionLandsHalfASpacingInside) {
    const auto g = shapes::rectangle({0, 0}, {4, 4});
    const double dx = 0.1, h = 0.08, band = 0.5;
    const FaceGrid<2> grid(g, band);
    const auto cloud = build_sdf(g, grid, dx, band);
    const CloudInterpolator<2> interp(cloud, QuinticKernel<2>(h));
    std::vector<Vec2> x;
    for (int i = 0; i < 10; ++i) x.push_back({4.0 - 0.002 * i, 1.5 + 0.1 * i});
    x.push_back({2.0, 2.0});  // deep inside, no cloud support
    auto p = ParticleSet<2>::at_rest(x, dx * dx, dx, ParticleRole::interior);
    const auto st = apply_bounding_interior(p, interp, dx);
    EXPECT_EQ(st.projected, 10u);
    EXPECT_EQ(st.empty_support, 1u);
    for (int i = 0; i < 10; ++i) {
        EXPECT_NEAR(p.positions[i][0] - 4.0, -0.05, 0.1 * dx);
        EXPECT_NEAR(p.positions[i][1], x[i][1], 1e-12);
        EXPECT_NEAR(interp(p.positions[i]).phi, -0.05, 0.1 * dx);
    }
    EXPECT_EQ(p.positions[10], Vec2(2.0, 2.0));
}

TEST(Bounding, BoundaryParticlesReturnToTheirShell) {
    const auto g = shapes::rectangle({0, 0}, {4, 4});
    const double dx = 0.1, h = 0.08, tau = 0.4, band = 1.0;
    const FaceGrid<2> grid(g, band);
    const auto cloud = build_sdf(g, grid, dx, band);
    const CloudInterpolator<2> interp(cloud, QuinticKernel<2>(h));
    auto p = ParticleSet<2>::at_rest({{4.5, 2.0}, {4.01, 2.0}, {4.2, 2.0}}, dx * dx, dx, ParticleRole::boundary);
    const auto st = apply_bounding_boundary(p, interp, tau, dx);
    EXPECT_EQ(st.projected, 2u);
    EXPECT_NEAR(p.positions[0][0], 4.0 + tau, 0.1 * dx);
    EXPECT_NEAR(p.positions[1][0], 4.05, 0.1 * dx);
    EXPECT_EQ(p.positions[2], Vec2(4.2, 2.0));
}

TEST(Pack, ConvergedLatticeDoesNotMove) {
    // Edge particles feel truncated support; the centre lies further from the edge
    // than a step's stages can propagate the disturbance.
    const double dx = 0.1;
    std::vector<Vec2> x;
    for (int i = -20; i <= 20; ++i)
        for (int j = -20; j <= 20; ++j) x.push_back({i * dx, j * dx});
    const auto start = x;
    PackingConfig cfg;
    cfg.max_iterations = 1;
    auto state = make_packing_state(ParticleSet<2>::at_rest(x, dx * dx, dx, ParticleRole::interior),
                                    ParticleSet<2>::at_rest({}, 0.0, dx, ParticleRole::boundary), remote_cloud(dx), cfg);
    pack(state, cfg);
    int checked = 0;
    double edge_motion = 0.0;
    for (std::size_t i = 0; i < start.size(); ++i) {
        const double moved = norm(state.interior.positions[i] - start[i]);
        if (norm(start[i]) <= 5 * dx) {
            EXPECT_LE(moved, 1e-10 * dx) << start[i];
            ++checked;
        }
        edge_motion = std::max(edge_motion, moved);
    }
    EXPECT_GT(checked, 60);
    EXPECT_GT(edge_motion, 0.0);
}

TEST(Pack, StartsEveryIterationFromRest) {
    const CircleFixture f;
    auto a = f.state(), b = f.state();
    for (auto& v : b.interior.advection_velocity) v = {3.0, -1.0};
    for (auto& v : b.interior.velocity) v = {-2.0, 5.0};
    for (auto& v : b.boundary.advection_velocity) v = {1.0, 1.0};
    PackingConfig cfg = f.cfg;
    cfg.max_iterations = 3;
    const auto ra = pack(a, cfg), rb = pack(b, cfg);
    EXPECT_EQ(a.interior.positions, b.interior.positions);
    EXPECT_EQ(a.boundary.positions, b.boundary.positions);
    EXPECT_EQ(ra.final_e_kin, rb.final_e_kin);
    for (const auto& v : b.interior.velocity) EXPECT_EQ(v, Vec2{});
}

TEST(Pack, EnergyRecordsAreFiniteAndNormalized) {
    const CircleFixture f;
    auto s = f.state();
    std::size_t calls = 0;
    const auto r = pack(s, f.cfg, [&](const EnergyRecord&) { ++calls; });
    ASSERT_EQ(r.records.size(), f.cfg.max_iterations);
    EXPECT_EQ(calls, r.records.size());
    double max_e = 0.0;
    for (const auto& rec : r.records) {
        EXPECT_TRUE(std::isfinite(rec.e_kin));
        EXPECT_GE(rec.e_kin, 0.0);
        EXPECT_LE(rec.e_kin_n, 1.0);
        EXPECT_GT(rec.dt, 0.0);
        max_e = std::max(max_e, rec.e_kin);
    }
    EXPECT_EQ(r.max_e_kin, max_e);
    EXPECT_EQ(s.energy_history.size(), r.records.size());
    EXPECT_GT(r.projected_interior, 0u);
}

TEST(Pack, LooseToleranceReachesComparableMinimumSooner) {
    CircleFixture f;
    f.cfg.max_iterations = 1500;
    struct Minimum {
        double l_inf = std::numeric_limits<double>::infinity();
        std::size_t iteration = 0;
    };
    auto run = [&](double atol) {
        PackingConfig cfg = f.cfg;
        cfg.abs_tolerance = atol;
        auto s = f.state();
        Minimum best;
        pack(s, cfg, [&](const EnergyRecord& rec) {
            const double l = density_error_norms(s.interior, s.boundary, s.kernel).l_inf;
            if (l < best.l_inf) best = {l, rec.iteration};
        });
        return best;
    };
    const Minimum tight = run(1e-6), loose = run(1e-2);
    EXPECT_LE(loose.l_inf, 2.0 * tight.l_inf);
    EXPECT_GE(loose.l_inf, 0.5 * tight.l_inf);
    EXPECT_LT(loose.iteration, tight.iteration);
}

TEST(Pack, PlateauDetector) {
    std::vector<double> flat(100, 0.3);
    EXPECT_TRUE(energy_plateau(flat, 50, 1e-3));
    EXPECT_FALSE(energy_plateau(std::span<const double>(flat).first(99), 50, 1e-3));
    std::vector<double> falling;
    for (int i = 0; i < 100; ++i) falling.push_back(std::exp(-0.05 * i));
    EXPECT_FALSE(energy_plateau(falling, 50, 1e-3));
}

TEST(Pack, RejectsBadConfiguration) {
    PackingConfig cfg;
    cfg.background_pressure = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.boundary_thickness = -1.0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_THROW(parse_placement("inside"), Error);
    const double dx = 0.1;
    auto empty = make_packing_state(ParticleSet<2>::at_rest({}, 0.0, dx, ParticleRole::interior),
                                    ParticleSet<2>::at_rest({}, 0.0, dx, ParticleRole::boundary), remote_cloud(dx),
                                    PackingConfig{});
    EXPECT_THROW(pack(empty, PackingConfig{}), Error);
}
