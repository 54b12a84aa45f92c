#ifndef BODYFIT_WINDING_HPP
#define BODYFIT_WINDING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <unordered_map>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/geometry.hpp"

namespace bodyfit {

/// Signed angle (2D) or signed solid angle (3D) subtended by one oriented face at p.
inline double face_angle(const Vec2& p, const Vec2& c0, const Vec2& c1) {
    const Vec2 a = c0 - p, b = c1 - p;
    return std::atan2(cross(a, b), dot(a, b));
}

inline double face_angle(const Vec3& p, const Vec3& v0, const Vec3& v1, const Vec3& v2) {
    const Vec3 a = v0 - p, b = v1 - p, c = v2 - p;
    const double la = norm(a), lb = norm(b), lc = norm(c);
    const double det = dot(a, cross(b, c));
    const double denom = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    return 2.0 * std::atan2(det, denom);
}

namespace detail {

template <int D>
constexpr double winding_normalization() {
    return D == 2 ? 1.0 / (2.0 * std::numbers::pi) : 1.0 / (4.0 * std::numbers::pi);
}

template <int D>
double angle_of(const Vec<D>& p, const std::vector<Vec<D>>& vertices, const std::array<std::uint32_t, D>& f) {
    if constexpr (D == 2) return face_angle(p, vertices[f[0]], vertices[f[1]]);
    else return face_angle(p, vertices[f[0]], vertices[f[1]], vertices[f[2]]);
}

}  // namespace detail

/// Generalized winding number of p with respect to the faces `subset` of g.
template <int D>
double winding_direct(const Vec<D>& p, const Geometry<D>& g, std::span<const std::uint32_t> subset) {
    double sum = 0.0;
    for (auto f : subset) sum += detail::angle_of<D>(p, g.vertices(), g.faces()[f]);
    return sum * detail::winding_normalization<D>();
}

template <int D>
double winding_direct(const Vec<D>& p, const Geometry<D>& g) {
    double sum = 0.0;
    for (const auto& f : g.faces()) sum += detail::angle_of<D>(p, g.vertices(), f);
    return sum * detail::winding_normalization<D>();
}

/// Winding number of an explicit face list over the vertices of g (used for closing surfaces).
template <int D>
double winding_of_faces(const Vec<D>& p, const std::vector<Vec<D>>& vertices,
                        std::span<const std::array<std::uint32_t, D>> faces) {
    double sum = 0.0;
    for (const auto& f : faces) sum += detail::angle_of<D>(p, vertices, f);
    return sum * detail::winding_normalization<D>();
}

/// Binary hierarchy of boxes over the faces of a geometry with a closing surface per node.
///
/// A node's closing surface caps the open surface formed by its faces whose vertices all
/// lie in the node box, and additionally carries the remaining (box-crossing) faces with
/// reversed orientation. For p outside the node box, the node's faces wind around p by
/// exactly minus the closing surface.
template <int D>
class WindingHierarchy {
public:
    using Face = std::array<std::uint32_t, D>;

    struct Node {
        Aabb<D> box;
        int left = -1;
        int right = -1;
        std::vector<std::uint32_t> faces;  ///< leaf faces (empty for internal nodes)
        std::vector<Face> closing;
        std::size_t face_count = 0;        ///< faces in the whole subtree
        bool use_closing = false;
        std::size_t crossing_faces = 0;

        bool is_leaf() const { return left < 0; }
    };

    static constexpr std::size_t default_leaf_capacity = 100;

    WindingHierarchy() = default;

    WindingHierarchy(const Geometry<D>& g, std::size_t leaf_capacity = default_leaf_capacity)
        : g_(&g), leaf_capacity_(std::max<std::size_t>(leaf_capacity, 1)) {
        if (g.empty()) throw Error("winding hierarchy requires a non-empty geometry");
        std::vector<std::uint32_t> ids(g.face_count());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
        centroids_.reserve(g.face_count());
        for (std::size_t f = 0; f < g.face_count(); ++f) centroids_.push_back(g.centroid(f));
        build(geometry_aabb(g), std::move(ids), 0);
    }

    /// The hierarchy references the geometry; it must outlive the hierarchy.
    WindingHierarchy(Geometry<D>&&, std::size_t = default_leaf_capacity) = delete;

    const Geometry<D>& geometry() const { return *g_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }
    std::size_t leaf_capacity() const { return leaf_capacity_; }

    /// All faces contained in the subtree of `node`.
    std::vector<std::uint32_t> subtree_faces(int node) const {
        std::vector<std::uint32_t> out;
        collect(node, out);
        return out;
    }

    double winding(const Vec<D>& p) const { return evaluate(0, p); }

private:
    void collect(int node, std::vector<std::uint32_t>& out) const {
        const Node& n = nodes_[static_cast<std::size_t>(node)];
        if (n.is_leaf()) {
            out.insert(out.end(), n.faces.begin(), n.faces.end());
            return;
        }
        collect(n.left, out);
        collect(n.right, out);
    }

    double evaluate(int index, const Vec<D>& p) const {
        const Node& n = nodes_[static_cast<std::size_t>(index)];
        if (n.is_leaf()) return winding_direct<D>(p, *g_, n.faces);
        if (n.use_closing && !n.box.contains(p)) return -winding_of_faces<D>(p, g_->vertices(), n.closing);
        return evaluate(n.left, p) + evaluate(n.right, p);
    }

    int build(const Aabb<D>& box, std::vector<std::uint32_t> ids, int depth) {
        const int index = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_.back().box = box;
        nodes_.back().face_count = ids.size();

        if (ids.size() <= leaf_capacity_ || depth > 60) {
            std::sort(ids.begin(), ids.end());
            nodes_[static_cast<std::size_t>(index)].faces = std::move(ids);
            return index;
        }

        std::size_t crossing = 0;
        auto closing = closing_surface(box, ids, crossing);
        {
            Node& n = nodes_[static_cast<std::size_t>(index)];
            n.crossing_faces = crossing;
            // A closing surface larger than the faces it replaces is never cheaper.
            n.use_closing = closing.size() < ids.size() && closing_is_consistent(box, ids, closing);
            if (n.use_closing) n.closing = std::move(closing);
        }

        // Split at the centroid median along the longest box axis.
        const int axis = box.longest_axis();
        const auto mid = ids.begin() + static_cast<std::ptrdiff_t>(ids.size() / 2);
        std::nth_element(ids.begin(), mid, ids.end(), [&](std::uint32_t a, std::uint32_t b) {
            const double ca = centroids_[a][axis], cb = centroids_[b][axis];
            return ca < cb || (ca == cb && a < b);
        });
        double split = centroids_[*mid][axis];
        split = std::clamp(split, box.min_corner[axis], box.max_corner[axis]);

        Aabb<D> left_box = box, right_box = box;
        left_box.max_corner[axis] = split;
        right_box.min_corner[axis] = split;

        std::vector<std::uint32_t> left_ids(ids.begin(), mid), right_ids(mid, ids.end());
        const int l = build(left_box, std::move(left_ids), depth + 1);
        const int r = build(right_box, std::move(right_ids), depth + 1);
        nodes_[static_cast<std::size_t>(index)].left = l;
        nodes_[static_cast<std::size_t>(index)].right = r;
        return index;
    }

    /// Checks w(faces) = -w(closing) at points just outside the box corners.
    bool closing_is_consistent(const Aabb<D>& box, const std::vector<std::uint32_t>& ids,
                               const std::vector<Face>& closing) const {
        const Vec<D> pad = 0.25 * box.extent() + Vec<D>::filled(1e-6);
        for (unsigned corner = 0; corner < (1u << D); ++corner) {
            Vec<D> p;
            for (int k = 0; k < D; ++k)
                p[k] = (corner >> k) & 1u ? box.max_corner[k] + pad[k] : box.min_corner[k] - pad[k];
            const double w = winding_direct<D>(p, *g_, ids) + winding_of_faces<D>(p, g_->vertices(), closing);
            if (!(std::abs(w) <= 1e-9)) return false;
        }
        return true;
    }

    /// Closing of the faces fully inside `box`, followed by the box-crossing faces reversed.
    std::vector<Face> closing_surface(const Aabb<D>& box, const std::vector<std::uint32_t>& ids,
                                      std::size_t& crossing_count) const {
        std::vector<Face> closing;
        std::vector<Face> crossing;
        std::vector<std::uint32_t> inside;
        for (auto f : ids) {
            bool in = true;
            for (int k = 0; k < D; ++k) in = in && box.contains(g_->vertex(f, k));
            if (in) inside.push_back(f);
            else crossing.push_back(g_->faces()[f]);
        }
        crossing_count = crossing.size();

        if constexpr (D == 2) {
            // Net edge flow per vertex: chain ends have positive, chain starts negative excess.
            std::map<std::uint32_t, int> excess;
            for (auto f : inside) {
                const auto& e = g_->faces()[f];
                --excess[e[0]];
                ++excess[e[1]];
            }
            std::int64_t hub = -1;
            for (const auto& [v, k] : excess)
                if (k != 0) {
                    hub = v;
                    break;
                }
            if (hub >= 0) {
                const auto h = static_cast<std::uint32_t>(hub);
                for (const auto& [v, k] : excess) {
                    if (v == h) continue;
                    for (int i = 0; i < k; ++i) closing.push_back({v, h});
                    for (int i = 0; i < -k; ++i) closing.push_back({h, v});
                }
            }
        } else {
            // Net multiplicity of each undirected edge, oriented from the smaller index.
            std::map<std::pair<std::uint32_t, std::uint32_t>, int> net;
            for (auto f : inside) {
                const auto& t = g_->faces()[f];
                for (int k = 0; k < 3; ++k) {
                    const std::uint32_t a = t[k], b = t[(k + 1) % 3];
                    if (a < b) ++net[{a, b}];
                    else --net[{b, a}];
                }
            }
            std::int64_t hub = -1;
            for (const auto& [e, k] : net)
                if (k != 0) {
                    hub = e.first;
                    break;
                }
            if (hub >= 0) {
                const auto h = static_cast<std::uint32_t>(hub);
                for (const auto& [e, k] : net) {
                    if (k == 0 || e.first == h || e.second == h) continue;
                    // Boundary edge u->v is capped by the fan triangle (hub, v, u).
                    const std::uint32_t u = k > 0 ? e.first : e.second;
                    const std::uint32_t v = k > 0 ? e.second : e.first;
                    for (int i = 0; i < std::abs(k); ++i) closing.push_back({h, v, u});
                }
            }
        }

        for (Face f : crossing) {
            std::swap(f[0], f[1]);
            closing.push_back(f);
        }
        return closing;
    }

    const Geometry<D>* g_ = nullptr;
    std::size_t leaf_capacity_ = default_leaf_capacity;
    std::vector<Vec<D>> centroids_;
    std::vector<Node> nodes_;
};

template <int D>
WindingHierarchy<D> build_hierarchy(const Geometry<D>& g,
                                    std::size_t leaf_capacity = WindingHierarchy<D>::default_leaf_capacity) {
    return WindingHierarchy<D>(g, leaf_capacity);
}

template <int D>
WindingHierarchy<D> build_hierarchy(Geometry<D>&&, std::size_t = 0) = delete;

template <int D>
double winding_hierarchical(const Vec<D>& p, const WindingHierarchy<D>& h) {
    return h.winding(p);
}

/// Relaxed inside test |w(p)| >= epsilon_w.
template <int D>
bool is_inside(const Vec<D>& p, const WindingHierarchy<D>& h, double epsilon_w = 0.5) {
    if (!(epsilon_w > 0.0 && epsilon_w <= 1.0)) throw Error("winding relaxation must lie in (0, 1]");
    return std::abs(h.winding(p)) >= epsilon_w;
}

}  // namespace bodyfit

#endif  // BODYFIT_WINDING_HPP
