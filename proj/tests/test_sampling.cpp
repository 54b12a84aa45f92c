#include <gtest/gtest.h>

#include <numbers>

#include "bodyfit/face_grid.hpp"
#include "bodyfit/sampling.hpp"
#include "bodyfit/sdf.hpp"
#include "bodyfit/shapes.hpp"

using namespace bodyfit;

namespace {

double min_distance(const ParticleSet<2>& a, const ParticleSet<2>& b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : a.positions)
        for (const auto& y : b.positions) best = std::min(best, norm(x - y));
    return best;
}

}  // namespace

TEST(Sampling, UnitSquareQuarterSpacingGivesSixteenParticles) {
    const auto g = shapes::rectangle({0, 0}, {1, 1});
    const WindingHierarchy<2> tree(g);
    const auto s = sample_interior(g, tree, 0.25);
    ASSERT_EQ(s.size(), 16u);
    for (const auto& x : s.positions)
        for (int c = 0; c < 2; ++c) {
            const double k = x[c] / 0.25 - 0.5;
            EXPECT_NEAR(k, std::round(k), 1e-12);
        }
    EXPECT_EQ(s.role, ParticleRole::interior);
    EXPECT_DOUBLE_EQ(s.spacing, 0.25);
}

TEST(Sampling, CircleAreaWithinLatticeError) {
    const auto g = shapes::circle(1.0, 2000);
    const WindingHierarchy<2> tree(g);
    for (double dx : {0.1, 0.05, 0.025}) {
        const auto s = sample_interior(g, tree, dx);
        const double area = static_cast<double>(s.size()) * dx * dx;
        // The polygon area is below pi by O(1/N^2); the lattice error is bounded by the perimeter band.
        EXPECT_NEAR(area, std::numbers::pi, 4.0 * dx) << dx;
    }
}

TEST(Sampling, TranslationChangesCountOnlySlightly) {
    const auto a = shapes::circle(1.0, 500), b = shapes::circle(1.0, 500, {0.0123, -0.0371});
    const WindingHierarchy<2> ta(a), tb(b);
    const double dx = 0.05;
    const auto sa = sample_interior(a, ta, dx), sb = sample_interior(b, tb, dx);
    const double perimeter_cells = 2.0 * std::numbers::pi / dx;
    EXPECT_LE(std::abs(static_cast<double>(sa.size()) - static_cast<double>(sb.size())), perimeter_cells);
}

TEST(Sampling, RelaxationThresholdIsMonotone) {
    // Open square: a lower threshold can only admit more points.
    const auto g = shapes::rectangle({0, 0}, {1, 1}).filtered([](std::size_t f) { return f != 1; });
    const WindingHierarchy<2> tree(g);
    std::size_t previous = 0;
    for (double eps : {0.8, 0.7, 0.6, 0.5, 0.3}) {
        const auto s = sample_interior(g, tree, 0.05, eps);
        EXPECT_GE(s.size(), previous) << eps;
        previous = s.size();
    }
}

TEST(Sampling, MassesAreDensityTimesCellVolume) {
    const auto g = shapes::box({0, 0, 0}, {1, 1, 1});
    const WindingHierarchy<3> tree(g);
    const auto s = sample_interior(g, tree, 0.2, 0.5, 1000.0);
    ASSERT_EQ(s.size(), 125u);
    for (double m : s.masses) EXPECT_NEAR(m, 1000.0 * 0.008, 1e-12);
    for (const auto& v : s.velocity) EXPECT_EQ(v, Vec3{});
}

TEST(Sampling, InteriorAndBoundaryAreDisjointOnOneLattice) {
    const auto g = shapes::naca4(12, 1.0, 120);
    const double dx = 0.01, tau = 4 * dx;
    const WindingHierarchy<2> tree(g);
    const FaceGrid<2> grid(g, 3 * 1.0 * dx + tau);
    const auto cloud = build_sdf(g, grid, dx, tau + dx);
    auto interior = sample_interior(g, tree, dx, 0.5, 2.0);
    auto boundary = sample_boundary(cloud, tau, 2.0);
    remove_coincident(boundary, interior);
    ASSERT_GT(boundary.size(), 0u);
    EXPECT_GE(min_distance(interior, boundary), dx * (1.0 - 1e-9));
    for (double m : boundary.masses) EXPECT_NEAR(m, 2.0 * dx * dx, 1e-15);
    EXPECT_EQ(boundary.role, ParticleRole::boundary);
}

TEST(Sampling, RemoveCoincidentDropsSharedPoints) {
    auto boundary = ParticleSet<2>::at_rest({{0.5, 0.5}, {1.5, 0.5}, {2.5, 0.5}}, 1.0, 1.0, ParticleRole::boundary);
    const auto interior = ParticleSet<2>::at_rest({{1.5, 0.5}}, 1.0, 1.0, ParticleRole::interior);
    EXPECT_EQ(remove_coincident(boundary, interior), 1u);
    ASSERT_EQ(boundary.size(), 2u);
    EXPECT_EQ(boundary.positions[1], Vec2(2.5, 0.5));
    EXPECT_EQ(boundary.velocity.size(), 2u);
}

TEST(Sampling, ZeroThicknessGivesEmptyBoundary) {
    const auto g = shapes::circle(1.0, 64);
    const FaceGrid<2> grid(g, 0.2);
    const auto cloud = build_sdf(g, grid, 0.05, 0.2);
    EXPECT_TRUE(sample_boundary(cloud, 0.0).empty());
}

TEST(Sampling, RejectsBadParameters) {
    const auto g = shapes::circle(1.0, 64);
    const WindingHierarchy<2> tree(g);
    EXPECT_THROW(sample_interior(g, tree, 0.0), Error);
    EXPECT_THROW(sample_interior(g, tree, 0.1, 0.0), Error);
    EXPECT_THROW(sample_interior(g, tree, 5.0), NumericalError);
}
