#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bodyfit/kernels.hpp"
#include "test_support.hpp"

using namespace bodyfit;

namespace {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
    std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[static_cast<std::size_t>(i)] = z;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Integral of W over R^D from the radial profile, piecewise on [0,h],[h,2h],[2h,3h].
template <int D>
double radial_integral(const QuinticKernel<D>& k) {
    const auto [x, w] = gauss_legendre(12);
    const double h = k.smoothing_length();
    double total = 0.0;
    for (int seg = 0; seg < 3; ++seg) {
        const double a = seg * h, b = (seg + 1) * h;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = 0.5 * (a + b) + 0.5 * (b - a) * x[i];
            double shell = 2.0;
            if (D == 2) shell = 2.0 * std::numbers::pi * r;
            if (D == 3) shell = 4.0 * std::numbers::pi * r * r;
            total += 0.5 * (b - a) * w[i] * shell * k.value(r);
        }
    }
    return total;
}

}  // namespace

TEST(Kernel, NormalizationConstants) {
    EXPECT_DOUBLE_EQ(QuinticKernel<1>::sigma(), 1.0 / 120.0);
    EXPECT_DOUBLE_EQ(QuinticKernel<2>::sigma(), 7.0 / (478.0 * std::numbers::pi));
    EXPECT_DOUBLE_EQ(QuinticKernel<3>::sigma(), 1.0 / (120.0 * std::numbers::pi));
}

TEST(Kernel, IntegratesToOneByQuadrature) {
    for (double h : {0.05, 0.8, 2.5}) {
        EXPECT_NEAR(radial_integral(QuinticKernel<1>(h)), 1.0, 1e-6);
        EXPECT_NEAR(radial_integral(QuinticKernel<2>(h)), 1.0, 1e-6);
        EXPECT_NEAR(radial_integral(QuinticKernel<3>(h)), 1.0, 1e-6);
    }
}

TEST(Kernel, BranchValues) {
    const double h = 0.37;
    const QuinticKernel<2> k(h);
    EXPECT_EQ(QuinticKernel<2>::profile(3.0), 0.0);
    EXPECT_EQ(k.value(3.0 * h * (1.0 + 1e-15)), 0.0);
    EXPECT_EQ(k.value(3.5 * h), 0.0);
    EXPECT_NEAR(k.value(2.0 * h), k.sigma() / (h * h), 1e-12 * k.sigma() / (h * h));
    EXPECT_NEAR(k.value(0.0), 66.0 * k.sigma() / (h * h), 1e-12);
    EXPECT_NEAR(k.value(h), 26.0 * k.sigma() / (h * h), 1e-12);
    EXPECT_DOUBLE_EQ(k.compact_support(), 3.0 * h);
    const QuinticKernel<3> k3(h);
    EXPECT_NEAR(k3.value(2.0 * h), k3.sigma() / (h * h * h), 1e-12);
}

TEST(Kernel, NonNegativeAndRadiallySymmetric) {
    std::mt19937_64 rng(7);
    const QuinticKernel<3> k(1.1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 r = test::random_point<3>(rng, -3.5, 3.5);
        EXPECT_GE(k.value(r), 0.0);
        // Rotation about a random axis (Rodrigues).
        Vec3 axis{u(rng), u(rng), u(rng)};
        axis = axis / norm(axis);
        const double t = 3.0 * u(rng);
        const Vec3 q = std::cos(t) * r + std::sin(t) * cross(axis, r) + (1.0 - std::cos(t)) * dot(axis, r) * axis;
        EXPECT_NEAR(k.value(q), k.value(r), 1e-14);
    }
}

TEST(Kernel, GradientZeroAtOriginAndAntisymmetric) {
    const QuinticKernel<2> k(0.5);
    EXPECT_EQ(k.gradient(Vec2{}), Vec2{});
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        const Vec2 r = test::random_point<2>(rng, -1.6, 1.6);
        const Vec2 a = k.gradient(r), b = k.gradient(-r);
        EXPECT_EQ(a[0], -b[0]);
        EXPECT_EQ(a[1], -b[1]);
    }
}

template <int D>
void check_gradient_against_differences(std::uint64_t seed) {
    const double h = 0.7;
    const QuinticKernel<D> k(h);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> radius(0.01 * h, 2.99 * h), u(-1.0, 1.0);
    const double step = 1e-6 * h;
    for (int i = 0; i < 100; ++i) {
        Vec<D> dir;
        for (int c = 0; c < D; ++c) dir[c] = u(rng);
        if (norm(dir) < 1e-3) continue;
        const Vec<D> r = dir * (radius(rng) / norm(dir));
        const Vec<D> g = k.gradient(r);
        for (int c = 0; c < D; ++c) {
            Vec<D> e{};
            e[c] = step;
            const double fd = (k.value(r + e) - k.value(r - e)) / (2.0 * step);
            EXPECT_LE(std::abs(g[c] - fd), 1e-6 * std::max(1.0, norm(g))) << "r = " << r;
        }
    }
}

TEST(Kernel, GradientMatchesCentralDifferences) {
    check_gradient_against_differences<1>(1);
    check_gradient_against_differences<2>(2);
    check_gradient_against_differences<3>(3);
}

TEST(Kernel, GradientSumVanishesOnSymmetricLattice) {
    const double dx = 0.1, h = 1.2 * dx;
    const QuinticKernel<3> k(h);
    Vec3 sum{};
    for (int i = -5; i <= 5; ++i)
        for (int j = -5; j <= 5; ++j)
            for (int l = -5; l <= 5; ++l) sum += k.gradient(Vec3(i * dx, j * dx, l * dx));
    EXPECT_LE(norm(sum), 1e-12 / std::pow(h, 4));
}

TEST(Shepard, SingleNeighborIsReproduced) {
    const QuinticKernel<2> k(1.0);
    const std::vector<CloudSample<2>> s{{{0.3, 0.1}, -0.7, {0.6, 0.8}}};
    const auto r = shepard_interpolate<2>({0.0, 0.0}, s, k);
    ASSERT_TRUE(r.ok());
    EXPECT_DOUBLE_EQ(r.phi, -0.7);
    EXPECT_NEAR(r.normal[0], 0.6, 1e-15);
    EXPECT_NEAR(r.normal[1], 0.8, 1e-15);
}

TEST(Shepard, PartitionOfUnity) {
    std::mt19937_64 rng(11);
    const QuinticKernel<3> k(0.4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<CloudSample<3>> s;
        for (int i = 0; i < 60; ++i) s.push_back({test::random_point<3>(rng, -1.0, 1.0), 1.0, {0.0, 0.0, 1.0}});
        const auto r = shepard_interpolate<3>(test::random_point<3>(rng, -0.5, 0.5), s, k);
        if (r.status == ShepardStatus::empty_support) continue;
        EXPECT_NEAR(r.phi, 1.0, 1e-12);
        EXPECT_NEAR(r.normal[2], 1.0, 1e-12);
    }
}

TEST(Shepard, ConstantFieldIsReproduced) {
    const QuinticKernel<2> k(0.25);
    std::vector<CloudSample<2>> s;
    for (int i = -4; i <= 4; ++i)
        for (int j = -4; j <= 4; ++j) s.push_back({{0.1 * i, 0.1 * j}, 0.123, {1.0, 0.0}});
    const auto r = shepard_interpolate<2>({0.013, -0.07}, s, k);
    ASSERT_TRUE(r.ok());
    EXPECT_NEAR(r.phi, 0.123, 1e-12);
}

TEST(Shepard, EmptySupportIsReported) {
    const QuinticKernel<2> k(0.1);
    const std::vector<CloudSample<2>> s{{{5.0, 5.0}, 1.0, {1.0, 0.0}}};
    const auto r = shepard_interpolate<2>({0.0, 0.0}, s, k);
    EXPECT_EQ(r.status, ShepardStatus::empty_support);
    EXPECT_FALSE(r.ok());
}

TEST(Shepard, OpposingNormalsAreReportedAsZeroNormal) {
    const QuinticKernel<2> k(1.0);
    const std::vector<CloudSample<2>> s{{{-0.5, 0.0}, -1.0, {-1.0, 0.0}}, {{0.5, 0.0}, 1.0, {1.0, 0.0}}};
    const auto r = shepard_interpolate<2>({0.0, 0.0}, s, k);
    EXPECT_EQ(r.status, ShepardStatus::zero_normal);
    EXPECT_NEAR(r.phi, 0.0, 1e-15);
}

TEST(Kernel, RejectsNonPositiveSmoothingLength) {
    EXPECT_THROW(QuinticKernel<2>(0.0), Error);
    EXPECT_THROW(QuinticKernel<3>(-1.0), Error);
}
