#ifndef BODYFIT_GEOMETRY_HPP
#define BODYFIT_GEOMETRY_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/vec.hpp"

namespace bodyfit {

template <int D>
struct Aabb {
    Vec<D> min_corner = Vec<D>::filled(std::numeric_limits<double>::infinity());
    Vec<D> max_corner = Vec<D>::filled(-std::numeric_limits<double>::infinity());

    bool empty() const { return min_corner[0] > max_corner[0]; }

    void extend(const Vec<D>& x) {
        min_corner = cwise_min(min_corner, x);
        max_corner = cwise_max(max_corner, x);
    }

    /// Closed-box containment.
    bool contains(const Vec<D>& x) const {
        for (int i = 0; i < D; ++i)
            if (x[i] < min_corner[i] || x[i] > max_corner[i]) return false;
        return true;
    }

    Aabb dilated(double r) const {
        return {min_corner - Vec<D>::filled(r), max_corner + Vec<D>::filled(r)};
    }

    Vec<D> extent() const { return max_corner - min_corner; }

    int longest_axis() const {
        const Vec<D> e = extent();
        int axis = 0;
        for (int i = 1; i < D; ++i)
            if (e[i] > e[axis]) axis = i;
        return axis;
    }
};

enum class GeometryFormat { stl_binary, stl_ascii, polygon_csv };

/// Immutable indexed face set: oriented edges in 2D, oriented triangles in 3D.
///
/// Construction merges bitwise-identical vertices, drops degenerate faces and
/// recomputes unit outward normals from the vertex order of every face.
template <int D>
class Geometry {
    static_assert(D == 2 || D == 3, "geometries are 2D polygons or 3D triangle meshes");

public:
    using Face = std::array<std::uint32_t, D>;
    static constexpr int dimension = D;

    Geometry() = default;

    Geometry(std::vector<Vec<D>> vertices, std::vector<Face> faces, Diagnostics* diag = nullptr) {
        std::vector<std::uint32_t> remap(vertices.size());
        std::unordered_map<std::array<std::uint64_t, D>, std::uint32_t, BitsHash> seen;
        seen.reserve(vertices.size());
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            std::array<std::uint64_t, D> key;
            for (int k = 0; k < D; ++k) key[k] = std::bit_cast<std::uint64_t>(vertices[i][k]);
            auto [it, inserted] = seen.try_emplace(key, static_cast<std::uint32_t>(vertices_.size()));
            if (inserted) vertices_.push_back(vertices[i]);
            remap[i] = it->second;
        }

        faces_.reserve(faces.size());
        normals_.reserve(faces.size());
        for (std::size_t f = 0; f < faces.size(); ++f) {
            Face face = faces[f];
            for (auto& idx : face) {
                if (idx >= remap.size())
                    throw Error("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                                " but only " + std::to_string(remap.size()) + " vertices exist");
                idx = remap[idx];
            }
            const Vec<D> n = raw_normal(face);
            const double len = norm(n);
            if (!(len > 0.0) || !std::isfinite(len)) {
                dropped_.push_back(f);
                if (diag) diag->warn("degenerate face " + std::to_string(f) + " dropped");
                continue;
            }
            faces_.push_back(face);
            normals_.push_back(n / len);
        }
    }

    const std::vector<Vec<D>>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Vec<D>>& face_normals() const { return normals_; }
    /// Input face indices removed as degenerate, in input order.
    const std::vector<std::size_t>& dropped_faces() const { return dropped_; }

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t face_count() const { return faces_.size(); }
    bool empty() const { return faces_.empty(); }

    const Vec<D>& vertex(std::size_t face, int corner) const { return vertices_[faces_[face][corner]]; }
    const Vec<D>& normal(std::size_t face) const { return normals_[face]; }

    Vec<D> centroid(std::size_t face) const {
        Vec<D> c;
        for (int k = 0; k < D; ++k) c += vertex(face, k);
        return c / static_cast<double>(D);
    }

    /// Same surface with every face orientation reversed.
    Geometry flipped() const {
        std::vector<Face> faces = faces_;
        for (auto& f : faces) std::swap(f[0], f[1]);
        return Geometry(vertices_, std::move(faces));
    }

    /// Copy keeping only the faces whose index satisfies keep(i).
    template <typename Pred>
    Geometry filtered(Pred keep) const {
        std::vector<Face> faces;
        for (std::size_t i = 0; i < faces_.size(); ++i)
            if (keep(i)) faces.push_back(faces_[i]);
        return Geometry(vertices_, std::move(faces));
    }

private:
    struct BitsHash {
        std::size_t operator()(const std::array<std::uint64_t, D>& k) const noexcept {
            std::uint64_t h = 0x9e3779b97f4a7c15ull;
            for (auto x : k) h = (h ^ x) * 0x100000001b3ull + (h >> 29);
            return static_cast<std::size_t>(h);
        }
    };

    Vec<D> raw_normal(const Face& f) const {
        if constexpr (D == 3) {
            return cross(vertices_[f[1]] - vertices_[f[0]], vertices_[f[2]] - vertices_[f[0]]);
        } else {
            const Vec2 d = vertices_[f[1]] - vertices_[f[0]];
            return {d[1], -d[0]};
        }
    }

    std::vector<Vec<D>> vertices_;
    std::vector<Face> faces_;
    std::vector<Vec<D>> normals_;
    std::vector<std::size_t> dropped_;
};

template <int D>
Aabb<D> face_aabb(const Geometry<D>& g, std::size_t face) {
    Aabb<D> box;
    for (int k = 0; k < D; ++k) box.extend(g.vertex(face, k));
    return box;
}

template <int D>
Aabb<D> geometry_aabb(const Geometry<D>& g) {
    if (g.empty()) throw Error("geometry_aabb: geometry has no faces");
    Aabb<D> box;
    for (std::size_t f = 0; f < g.face_count(); ++f)
        for (int k = 0; k < D; ++k) box.extend(g.vertex(f, k));
    return box;
}

/// Concatenates several bodies into one face set; inside tests and distances then act on the union.
template <int D>
Geometry<D> merge_geometries(const std::vector<Geometry<D>>& parts) {
    std::vector<Vec<D>> vertices;
    std::vector<typename Geometry<D>::Face> faces;
    for (const auto& g : parts) {
        const auto offset = static_cast<std::uint32_t>(vertices.size());
        vertices.insert(vertices.end(), g.vertices().begin(), g.vertices().end());
        for (auto f : g.faces()) {
            for (auto& i : f) i += offset;
            faces.push_back(f);
        }
    }
    return Geometry<D>(std::move(vertices), std::move(faces));
}

// ---------------------------------------------------------------------------
// Readers

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint32_t load_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float load_f32_le(const unsigned char* p) { return std::bit_cast<float>(load_u32_le(p)); }

inline void store_u32_le(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xffu));
}

inline void store_f32_le(std::string& out, double x) {
    store_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
}

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view tok, const std::string& where) {
    std::string s(trim(tok));
    if (s.empty()) throw ParseError(where + ": empty number");
    std::size_t used = 0;
    double x;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ParseError(where + ": cannot parse number '" + s + "'");
    }
    if (used != s.size()) throw ParseError(where + ": trailing characters in '" + s + "'");
    return x;
}

}  // namespace detail

inline Geometry<3> load_stl_binary(const std::string& path, Diagnostics* diag = nullptr) {
    const std::string bytes = detail::read_file_bytes(path);
    if (bytes.size() < 84) throw ParseError("'" + path + "': truncated binary STL header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t n = detail::load_u32_le(p + 80);
    if (bytes.size() < 84 + 50 * n)
        throw ParseError("'" + path + "': truncated binary STL, header announces " + std::to_string(n) +
                         " triangles but only " + std::to_string((bytes.size() - 84) / 50) + " are present");
    std::vector<Vec3> vertices;
    std::vector<Geometry<3>::Face> faces;
    vertices.reserve(3 * n);
    faces.reserve(n);
    for (std::uint64_t t = 0; t < n; ++t) {
        // 12 bytes of stored normal are skipped; normals are recomputed from the winding.
        const unsigned char* rec = p + 84 + 50 * t + 12;
        const auto base = static_cast<std::uint32_t>(vertices.size());
        for (int k = 0; k < 3; ++k)
            vertices.push_back({detail::load_f32_le(rec + 12 * k), detail::load_f32_le(rec + 12 * k + 4),
                                detail::load_f32_le(rec + 12 * k + 8)});
        faces.push_back({base, base + 1, base + 2});
    }
    return Geometry<3>(std::move(vertices), std::move(faces), diag);
}

inline Geometry<3> load_stl_ascii(const std::string& path, Diagnostics* diag = nullptr) {
    std::istringstream in(detail::read_file_bytes(path));
    std::vector<Vec3> vertices;
    std::vector<Geometry<3>::Face> faces;
    std::string tok;
    auto expect = [&](std::string_view word) {
        if (!(in >> tok) || tok != word)
            throw ParseError("'" + path + "': expected '" + std::string(word) + "' in facet " +
                             std::to_string(faces.size()) + ", got '" + tok + "'");
    };
    auto number = [&]() {
        if (!(in >> tok)) throw ParseError("'" + path + "': unexpected end of file in facet " + std::to_string(faces.size()));
        return detail::parse_double(tok, "'" + path + "' facet " + std::to_string(faces.size()));
    };

    if (!(in >> tok) || tok != "solid") throw ParseError("'" + path + "': ASCII STL must start with 'solid'");
    // Skip the rest of the solid line (optional name).
    std::string rest;
    std::getline(in, rest);
    while (in >> tok) {
        if (tok == "endsolid") break;
        if (tok != "facet") throw ParseError("'" + path + "': expected 'facet', got '" + tok + "'");
        expect("normal");
        for (int k = 0; k < 3; ++k) number();
        expect("outer");
        expect("loop");
        const auto base = static_cast<std::uint32_t>(vertices.size());
        for (int k = 0; k < 3; ++k) {
            expect("vertex");
            const double x = number(), y = number(), z = number();
            vertices.push_back({x, y, z});
        }
        expect("endloop");
        expect("endfacet");
        faces.push_back({base, base + 1, base + 2});
    }
    if (tok != "endsolid") throw ParseError("'" + path + "': missing 'endsolid'");
    return Geometry<3>(std::move(vertices), std::move(faces), diag);
}

/// One `x,y` vertex per line; blank lines separate loops; each loop is implicitly closed.
/// Outer loops are counter-clockwise, holes clockwise. Lines starting with '#' are comments.
inline Geometry<2> load_polygon_csv(const std::string& path, Diagnostics* diag = nullptr) {
    std::istringstream in(detail::read_file_bytes(path));
    std::vector<Vec2> vertices;
    std::vector<Geometry<2>::Face> faces;
    std::vector<Vec2> loop;
    std::size_t line_no = 0;

    auto close_loop = [&]() {
        if (loop.empty()) return;
        if (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
        if (loop.size() < 3)
            throw ParseError("'" + path + "': polygon loop ending at line " + std::to_string(line_no) +
                             " has fewer than 3 vertices");
        const auto base = static_cast<std::uint32_t>(vertices.size());
        const auto n = static_cast<std::uint32_t>(loop.size());
        vertices.insert(vertices.end(), loop.begin(), loop.end());
        for (std::uint32_t i = 0; i < n; ++i) faces.push_back({base + i, base + (i + 1) % n});
        loop.clear();
    };

    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view s = detail::trim(line);
        if (s.empty()) {
            close_loop();
            continue;
        }
        if (s.front() == '#') continue;
        const auto comma = s.find(',');
        const std::string where = "'" + path + "' line " + std::to_string(line_no);
        if (comma == std::string_view::npos) throw ParseError(where + ": expected 'x,y'");
        auto second = s.substr(comma + 1);
        if (second.find(',') != std::string_view::npos) throw ParseError(where + ": expected exactly two columns");
        loop.push_back({detail::parse_double(s.substr(0, comma), where), detail::parse_double(second, where)});
    }
    close_loop();
    if (faces.empty()) throw ParseError("'" + path + "': no polygon vertices");
    return Geometry<2>(std::move(vertices), std::move(faces), diag);
}

/// Guesses the format from the extension and, for STL, from the size/header.
inline GeometryFormat detect_format(const std::string& path) {
    auto ends_with = [&](std::string_view suffix) {
        if (path.size() < suffix.size()) return false;
        return std::equal(suffix.rbegin(), suffix.rend(), path.rbegin(),
                          [](char a, char b) { return std::tolower(a) == std::tolower(b); });
    };
    if (ends_with(".csv") || ends_with(".txt")) return GeometryFormat::polygon_csv;
    const std::string bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 84) {
        const auto n = detail::load_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 80);
        if (bytes.size() == 84 + 50 * static_cast<std::uint64_t>(n)) return GeometryFormat::stl_binary;
    }
    if (detail::trim(bytes).substr(0, 5) == "solid") return GeometryFormat::stl_ascii;
    return GeometryFormat::stl_binary;
}

inline GeometryFormat parse_format(std::string_view name) {
    if (name == "stl_binary") return GeometryFormat::stl_binary;
    if (name == "stl_ascii") return GeometryFormat::stl_ascii;
    if (name == "polygon_csv") return GeometryFormat::polygon_csv;
    throw Error("unknown geometry format '" + std::string(name) + "'");
}

inline int format_dimension(GeometryFormat f) { return f == GeometryFormat::polygon_csv ? 2 : 3; }

template <int D>
Geometry<D> load_geometry(const std::string& path, GeometryFormat format, Diagnostics* diag = nullptr) {
    if constexpr (D == 2) {
        if (format != GeometryFormat::polygon_csv) throw Error("2D geometries must be polygon_csv");
        return load_polygon_csv(path, diag);
    } else {
        if (format == GeometryFormat::stl_binary) return load_stl_binary(path, diag);
        if (format == GeometryFormat::stl_ascii) return load_stl_ascii(path, diag);
        throw Error("3D geometries must be STL");
    }
}

// ---------------------------------------------------------------------------
// Writers

inline void write_stl_binary(const std::string& path, const Geometry<3>& g) {
    std::string out(80, '\0');
    const std::string_view header = "bodyfit binary STL";
    std::copy(header.begin(), header.end(), out.begin());
    detail::store_u32_le(out, static_cast<std::uint32_t>(g.face_count()));
    for (std::size_t f = 0; f < g.face_count(); ++f) {
        for (int k = 0; k < 3; ++k) detail::store_f32_le(out, g.normal(f)[k]);
        for (int c = 0; c < 3; ++c)
            for (int k = 0; k < 3; ++k) detail::store_f32_le(out, g.vertex(f, c)[k]);
        out.push_back('\0');
        out.push_back('\0');
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot write '" + path + "'");
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

inline void write_stl_ascii(const std::string& path, const Geometry<3>& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    out << "solid bodyfit\n";
    for (std::size_t f = 0; f < g.face_count(); ++f) {
        const auto& n = g.normal(f);
        out << "  facet normal " << n[0] << ' ' << n[1] << ' ' << n[2] << "\n    outer loop\n";
        for (int c = 0; c < 3; ++c) {
            const auto& v = g.vertex(f, c);
            out << "      vertex " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
        }
        out << "    endloop\n  endfacet\n";
    }
    out << "endsolid bodyfit\n";
}

/// Writes each closed edge chain as one loop; the geometry must consist of closed loops.
inline void write_polygon_csv(const std::string& path, const Geometry<2>& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out.precision(17);
    std::vector<bool> used(g.face_count(), false);
    std::unordered_map<std::uint32_t, std::size_t> edge_from;
    for (std::size_t f = 0; f < g.face_count(); ++f) edge_from.emplace(g.faces()[f][0], f);
    for (std::size_t start = 0; start < g.face_count(); ++start) {
        if (used[start]) continue;
        if (start) out << '\n';
        std::size_t f = start;
        while (!used[f]) {
            used[f] = true;
            const auto& v = g.vertices()[g.faces()[f][0]];
            out << v[0] << ',' << v[1] << '\n';
            auto it = edge_from.find(g.faces()[f][1]);
            if (it == edge_from.end()) break;
            f = it->second;
        }
    }
}

}  // namespace bodyfit

#endif  // BODYFIT_GEOMETRY_HPP
