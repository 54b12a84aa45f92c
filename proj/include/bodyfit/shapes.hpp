#ifndef BODYFIT_SHAPES_HPP
#define BODYFIT_SHAPES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/geometry.hpp"

/// Analytic test shapes with outward orientation.
namespace bodyfit::shapes {

/// Counter-clockwise regular polygon inscribed in the circle of radius r.
inline Geometry<2> circle(double radius, std::size_t segments, Vec2 center = {0.0, 0.0}) {
    if (segments < 3) throw Error("circle needs at least 3 segments");
    std::vector<Vec2> v;
    std::vector<std::array<std::uint32_t, 2>> f;
    for (std::size_t i = 0; i < segments; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segments);
        v.push_back(center + Vec2{radius * std::cos(t), radius * std::sin(t)});
        f.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>((i + 1) % segments)});
    }
    return Geometry<2>(std::move(v), std::move(f));
}

inline Geometry<2> rectangle(Vec2 lo, Vec2 hi) {
    std::vector<Vec2> v{lo, {hi[0], lo[1]}, hi, {lo[0], hi[1]}};
    std::vector<std::array<std::uint32_t, 2>> f{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    return Geometry<2>(std::move(v), std::move(f));
}

/// NACA 4-digit airfoil with closed trailing edge, `points_per_side` cosine-spaced stations per side.
inline Geometry<2> naca4(int digits, double chord, std::size_t points_per_side) {
    if (points_per_side < 3) throw Error("airfoil needs at least 3 points per side");
    const double m = (digits / 1000) / 100.0;
    const double p = ((digits / 100) % 10) / 10.0;
    const double t = (digits % 100) / 100.0;
    auto thickness = [&](double x) {
        return 5.0 * t * (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x);
    };
    auto camber = [&](double x) -> std::pair<double, double> {
        if (m == 0.0 || p == 0.0) return {0.0, 0.0};
        if (x < p) return {m / (p * p) * (2.0 * p * x - x * x), 2.0 * m / (p * p) * (p - x)};
        return {m / ((1 - p) * (1 - p)) * (1 - 2 * p + 2 * p * x - x * x), 2.0 * m / ((1 - p) * (1 - p)) * (p - x)};
    };
    auto station = [&](std::size_t i) {
        const double beta = std::numbers::pi * static_cast<double>(i) / static_cast<double>(points_per_side);
        return 0.5 * (1.0 - std::cos(beta));
    };
    std::vector<Vec2> v;
    // Trailing edge -> upper side -> leading edge -> lower side, counter-clockwise.
    const std::size_t n = points_per_side;
    for (std::size_t k = 0; k <= n; ++k) {
        const double x = station(n - k);
        const auto [yc, dy] = camber(x);
        const double th = std::atan(dy), yt = thickness(x);
        v.push_back(Vec2{(x - yt * std::sin(th)) * chord, (yc + yt * std::cos(th)) * chord});
    }
    for (std::size_t k = 1; k < n; ++k) {
        const double x = station(k);
        const auto [yc, dy] = camber(x);
        const double th = std::atan(dy), yt = thickness(x);
        v.push_back(Vec2{(x + yt * std::sin(th)) * chord, (yc - yt * std::cos(th)) * chord});
    }
    std::vector<std::array<std::uint32_t, 2>> f;
    for (std::size_t i = 0; i < v.size(); ++i)
        f.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>((i + 1) % v.size())});
    return Geometry<2>(std::move(v), std::move(f));
}

/// Geodesic sphere from a subdivided icosahedron: 20 * 4^level faces.
inline Geometry<3> icosphere(double radius, int level, Vec3 center = {0.0, 0.0, 0.0}) {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v{{-1, g, 0}, {1, g, 0}, {-1, -g, 0}, {1, -g, 0}, {0, -1, g}, {0, 1, g},
                        {0, -1, -g}, {0, 1, -g}, {g, 0, -1}, {g, 0, 1}, {-g, 0, -1}, {-g, 0, 1}};
    for (auto& x : v) x = x / norm(x);
    std::vector<std::array<std::uint32_t, 3>> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int l = 0; l < level; ++l) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            const auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            Vec3 m = v[a] + v[b];
            v.push_back(m / norm(m));
            const auto id = static_cast<std::uint32_t>(v.size() - 1);
            mid.emplace(key, id);
            return id;
        };
        std::vector<std::array<std::uint32_t, 3>> next;
        next.reserve(f.size() * 4);
        for (const auto& t : f) {
            const auto a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
            next.push_back({t[0], a, c});
            next.push_back({t[1], b, a});
            next.push_back({t[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    for (auto& x : v) x = center + radius * x;
    return Geometry<3>(std::move(v), std::move(f));
}

/// Latitude-longitude sphere with 2 * longitudes * (latitudes - 2) faces; latitudes counts both poles.
inline Geometry<3> uv_sphere(double radius, std::size_t longitudes, std::size_t latitudes, Vec3 center = {0.0, 0.0, 0.0}) {
    if (longitudes < 3 || latitudes < 3) throw Error("uv sphere needs at least 3 longitudes and latitudes");
    std::vector<Vec3> v;
    v.push_back(center + Vec3{0.0, 0.0, radius});
    for (std::size_t i = 1; i + 1 < latitudes; ++i) {
        const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(latitudes - 1);
        for (std::size_t j = 0; j < longitudes; ++j) {
            const double ph = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(longitudes);
            v.push_back(center + radius * Vec3{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)});
        }
    }
    v.push_back(center + Vec3{0.0, 0.0, -radius});
    const auto south = static_cast<std::uint32_t>(v.size() - 1);
    auto ring = [&](std::size_t i, std::size_t j) {
        return static_cast<std::uint32_t>(1 + (i - 1) * longitudes + j % longitudes);
    };
    std::vector<std::array<std::uint32_t, 3>> f;
    for (std::size_t j = 0; j < longitudes; ++j) f.push_back({0, ring(1, j), ring(1, j + 1)});
    for (std::size_t i = 1; i + 2 < latitudes; ++i)
        for (std::size_t j = 0; j < longitudes; ++j) {
            f.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            f.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    for (std::size_t j = 0; j < longitudes; ++j) f.push_back({south, ring(latitudes - 2, j + 1), ring(latitudes - 2, j)});
    return Geometry<3>(std::move(v), std::move(f));
}

/// Axis-aligned box as 12 triangles.
inline Geometry<3> box(Vec3 lo, Vec3 hi) {
    std::vector<Vec3> v;
    for (int i = 0; i < 8; ++i) v.push_back(Vec3{(i & 1) ? hi[0] : lo[0], (i & 2) ? hi[1] : lo[1], (i & 4) ? hi[2] : lo[2]});
    std::vector<std::array<std::uint32_t, 3>> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                                {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
    return Geometry<3>(std::move(v), std::move(f));
}

}  // namespace bodyfit::shapes

#endif  // BODYFIT_SHAPES_HPP
