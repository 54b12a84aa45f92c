#ifndef BODYFIT_SDF_HPP
#define BODYFIT_SDF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/face_grid.hpp"
#include "bodyfit/geometry.hpp"
#include "bodyfit/lattice.hpp"
#include "bodyfit/parallel.hpp"

namespace bodyfit {

enum class Feature { face_interior, edge, vertex };

/// Closest point of a face to a query and the face feature it lies on.
///
/// `local` is the vertex corner (vertex hit) or the edge index (edge hit, edge e
/// runs from corner e to corner e+1 mod 3).
template <int D>
struct ClosestPoint {
    Vec<D> point;
    double squared_distance = std::numeric_limits<double>::infinity();
    Feature feature = Feature::face_interior;
    int local = 0;
};

template <int D>
struct FaceDistance {
    double distance = 0.0;  ///< signed, negative inside
    Vec<D> normal;          ///< outward unit normal of the face
    Feature feature = Feature::face_interior;
};

inline ClosestPoint<2> closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double t = dot(p - a, ab) / squared_norm(ab);
    ClosestPoint<2> c;
    if (t <= 0.0) {
        c.point = a;
        c.feature = Feature::vertex;
        c.local = 0;
    } else if (t >= 1.0) {
        c.point = b;
        c.feature = Feature::vertex;
        c.local = 1;
    } else {
        c.point = a + t * ab;
        c.feature = Feature::face_interior;
    }
    c.squared_distance = squared_norm(p - c.point);
    return c;
}

/// Voronoi-region classification of the closest point on triangle abc.
inline ClosestPoint<3> closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    ClosestPoint<3> r;
    auto finish = [&](const Vec3& q, Feature f, int local) {
        r.point = q;
        r.feature = f;
        r.local = local;
        r.squared_distance = squared_norm(p - q);
        return r;
    };
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return finish(a, Feature::vertex, 0);

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return finish(b, Feature::vertex, 1);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return finish(a + (d1 / (d1 - d3)) * ab, Feature::edge, 0);

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return finish(c, Feature::vertex, 2);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return finish(a + (d2 / (d2 - d6)) * ac, Feature::edge, 2);

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return finish(b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b), Feature::edge, 1);

    const double denom = 1.0 / (va + vb + vc);
    return finish(a + ab * (vb * denom) + ac * (vc * denom), Feature::face_interior, 0);
}

/// Signed distances to the faces of a geometry, with the sign taken from
/// angle-weighted pseudo-normals so that edge and vertex hits are classified consistently.
template <int D>
class SurfaceDistance {
public:
    explicit SurfaceDistance(const Geometry<D>& g) : g_(&g) {
        vertex_normals_.assign(g.vertex_count(), Vec<D>{});
        if constexpr (D == 2) {
            for (std::size_t f = 0; f < g.face_count(); ++f)
                for (int k = 0; k < 2; ++k) vertex_normals_[g.faces()[f][k]] += g.normal(f);
        } else {
            std::unordered_map<std::uint64_t, Vec3> edge_sum;
            auto edge_key = [](std::uint32_t i, std::uint32_t j) {
                if (i > j) std::swap(i, j);
                return (static_cast<std::uint64_t>(i) << 32) | j;
            };
            for (std::size_t f = 0; f < g.face_count(); ++f) {
                const auto& face = g.faces()[f];
                for (int k = 0; k < 3; ++k) {
                    const Vec3 e1 = g.vertex(f, (k + 1) % 3) - g.vertex(f, k);
                    const Vec3 e2 = g.vertex(f, (k + 2) % 3) - g.vertex(f, k);
                    const double cosang = std::clamp(dot(e1, e2) / (norm(e1) * norm(e2)), -1.0, 1.0);
                    vertex_normals_[face[k]] += std::acos(cosang) * g.normal(f);
                    edge_sum[edge_key(face[k], face[(k + 1) % 3])] += g.normal(f);
                }
            }
            edge_normals_.resize(g.face_count());
            for (std::size_t f = 0; f < g.face_count(); ++f) {
                const auto& face = g.faces()[f];
                for (int k = 0; k < 3; ++k) edge_normals_[f][k] = edge_sum[edge_key(face[k], face[(k + 1) % 3])];
            }
        }
    }

    SurfaceDistance(Geometry<D>&&) = delete;

    const Geometry<D>& geometry() const { return *g_; }

    ClosestPoint<D> closest(const Vec<D>& x, std::size_t face) const {
        if constexpr (D == 2) {
            return closest_point_on_segment(x, g_->vertex(face, 0), g_->vertex(face, 1));
        } else {
            return closest_point_on_triangle(x, g_->vertex(face, 0), g_->vertex(face, 1), g_->vertex(face, 2));
        }
    }

    /// Signed distance for an already computed closest point on `face`.
    FaceDistance<D> sign(const Vec<D>& x, std::size_t face, const ClosestPoint<D>& c) const {
        FaceDistance<D> r;
        r.feature = c.feature;
        r.normal = g_->normal(face);
        const double d = std::sqrt(c.squared_distance);
        if (d == 0.0) return r;
        Vec<D> pseudo;
        switch (c.feature) {
        case Feature::face_interior:
            pseudo = g_->normal(face);
            break;
        case Feature::edge:
            if constexpr (D == 3) pseudo = edge_normals_[face][c.local];
            break;
        case Feature::vertex:
            pseudo = vertex_normals_[g_->faces()[face][c.local]];
            break;
        }
        r.distance = dot(x - c.point, pseudo) < 0.0 ? -d : d;
        return r;
    }

    FaceDistance<D> signed_distance(const Vec<D>& x, std::size_t face) const { return sign(x, face, closest(x, face)); }

    /// Face with the smallest unsigned distance among `faces` (lowest index on ties).
    template <typename Range>
    std::pair<std::size_t, ClosestPoint<D>> nearest(const Vec<D>& x, const Range& faces) const {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        ClosestPoint<D> best_c;
        for (auto f : faces) {
            const auto c = closest(x, f);
            if (c.squared_distance < best_c.squared_distance) {
                best_c = c;
                best = f;
            }
        }
        return {best, best_c};
    }

    /// Signed distance to the whole surface by exhaustive search over all faces.
    FaceDistance<D> brute_force(const Vec<D>& x) const {
        std::size_t best = 0;
        ClosestPoint<D> best_c;
        for (std::size_t f = 0; f < g_->face_count(); ++f) {
            const auto c = closest(x, f);
            if (c.squared_distance < best_c.squared_distance) {
                best_c = c;
                best = f;
            }
        }
        return sign(x, best, best_c);
    }

private:
    const Geometry<D>* g_;
    std::vector<Vec<D>> vertex_normals_;
    std::vector<std::array<Vec3, 3>> edge_normals_;
};

template <int D>
FaceDistance<D> signed_distance_to_face(const Vec<D>& x, const SurfaceDistance<D>& surface, std::size_t face) {
    return surface.signed_distance(x, face);
}

/// Fixed points near the surface storing signed distance and the normal of the closest face.
template <int D>
struct SignedDistanceCloud {
    std::vector<Vec<D>> positions;
    std::vector<double> phi;
    std::vector<Vec<D>> normals;
    double band_radius = 0.0;
    double spacing = 0.0;
    Lattice<D> lattice;

    std::size_t size() const { return positions.size(); }
};

enum class FaceSearch { face_grid, all_faces };

/// Narrow-band signed distance cloud on a lattice registered at the geometry bounding-box minimum.
///
/// Points in empty grid cells are skipped; every remaining point takes the nearest
/// face among its candidates (all faces with FaceSearch::all_faces) and is kept if
/// |phi| <= band_radius.
template <int D>
SignedDistanceCloud<D> build_sdf(const Geometry<D>& g, const FaceGrid<D>& grid, double spacing, double band_radius,
                                 FaceSearch search = FaceSearch::face_grid) {
    if (grid.cell_size() < band_radius * (1.0 - 1e-12))
        throw Error("build_sdf: face grid cell size is smaller than the band radius");
    const SurfaceDistance<D> surface(g);
    SignedDistanceCloud<D> cloud;
    cloud.band_radius = band_radius;
    cloud.spacing = spacing;
    cloud.lattice =
        Lattice<D>::covering(geometry_aabb(g), spacing, static_cast<std::int64_t>(std::ceil(band_radius / spacing)));
    const Lattice<D>& lattice = cloud.lattice;

    // Rows along the last axis are processed independently, then concatenated in order.
    const auto row_length = static_cast<std::size_t>(lattice.extent(D - 1));
    const std::size_t rows = lattice.size() / row_length;
    std::vector<std::vector<std::pair<Vec<D>, FaceDistance<D>>>> per_row(rows);
    std::vector<std::uint32_t> all;
    if (search == FaceSearch::all_faces) {
        all.resize(g.face_count());
        for (std::size_t f = 0; f < all.size(); ++f) all[f] = static_cast<std::uint32_t>(f);
    }

    parallel_for(rows, [&](std::size_t row) {
        auto& out = per_row[row];
        for (std::size_t j = 0; j < row_length; ++j) {
            const Vec<D> x = lattice.point(lattice.index(row * row_length + j));
            const auto near = grid.faces_near(x);
            if (near.empty()) continue;
            const auto [face, c] = search == FaceSearch::face_grid ? surface.nearest(x, near) : surface.nearest(x, all);
            const auto fd = surface.sign(x, face, c);
            if (std::abs(fd.distance) > band_radius) continue;
            out.emplace_back(x, fd);
        }
    });

    for (const auto& row : per_row)
        for (const auto& [x, fd] : row) {
            cloud.positions.push_back(x);
            cloud.phi.push_back(fd.distance);
            cloud.normals.push_back(fd.normal);
        }
    if (cloud.positions.empty()) throw NumericalError("build_sdf: no lattice point lies within the band");
    return cloud;
}

template <int D>
SignedDistanceCloud<D> build_sdf_brute_force(const Geometry<D>& g, const FaceGrid<D>& grid, double spacing,
                                             double band_radius) {
    return build_sdf(g, grid, spacing, band_radius, FaceSearch::all_faces);
}

/// Cloud points strictly outside the surface with phi <= thickness.
template <int D>
std::vector<Vec<D>> boundary_positions(const SignedDistanceCloud<D>& cloud, double thickness,
                                       Diagnostics* diag = nullptr) {
    if (thickness > cloud.band_radius * (1.0 + 1e-12))
        throw Error("boundary thickness exceeds the signed distance band radius");
    std::vector<Vec<D>> out;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        if (cloud.phi[i] > 0.0 && cloud.phi[i] <= thickness) out.push_back(cloud.positions[i]);
    if (out.empty() && thickness > 0.0 && diag)
        diag->warn("boundary thickness " + std::to_string(thickness) + " is below the cloud spacing; no boundary points");
    return out;
}

}  // namespace bodyfit

#endif  // BODYFIT_SDF_HPP
