#ifndef BODYFIT_FACE_GRID_HPP
#define BODYFIT_FACE_GRID_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "bodyfit/cells.hpp"
#include "bodyfit/error.hpp"
#include "bodyfit/geometry.hpp"

namespace bodyfit {

/// Face-based neighborhood search: hash grid of cell size r_s whose cells hold
/// every face whose bounding-box cells lie within one cell ring.
///
/// Any face within distance r_s of a point x is listed in the cell of x.
template <int D>
class FaceGrid {
public:
    using Cells = std::unordered_map<CellKey<D>, std::vector<std::uint32_t>, CellKeyHash<D>>;

    FaceGrid() = default;

    FaceGrid(const Geometry<D>& g, double search_radius) : cell_size_(search_radius) {
        if (!(search_radius > 0.0)) throw Error("face grid search radius must be positive");
        if (g.empty()) throw Error("face grid requires a non-empty geometry");

        // Pass 1: every cell overlapped by a face bounding box receives the face.
        Cells direct;
        for (std::size_t f = 0; f < g.face_count(); ++f) {
            const Aabb<D> box = face_aabb(g, f);
            for_each_cell_in_box<D>(cell_coordinates(box.min_corner, cell_size_),
                                    cell_coordinates(box.max_corner, cell_size_),
                                    [&](const CellKey<D>& c) { direct[c].push_back(static_cast<std::uint32_t>(f)); });
        }

        // Pass 2: union over the direct neighborhood of every populated cell and its ring.
        std::unordered_set<CellKey<D>, CellKeyHash<D>> padded;
        for (const auto& [key, faces] : direct)
            for_each_neighbor_cell<D>(key, [&](const CellKey<D>& c) { padded.insert(c); });

        cells_.reserve(padded.size());
        std::vector<std::uint32_t> ids;
        for (const auto& cell : padded) {
            ids.clear();
            for_each_neighbor_cell<D>(cell, [&](const CellKey<D>& c) {
                if (auto it = direct.find(c); it != direct.end()) ids.insert(ids.end(), it->second.begin(), it->second.end());
            });
            std::sort(ids.begin(), ids.end());
            ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
            cells_.emplace(cell, ids);
        }
    }

    double cell_size() const { return cell_size_; }
    const Cells& cells() const { return cells_; }
    std::size_t cell_count() const { return cells_.size(); }

    /// Sorted unique faces stored at the cell containing x; empty when the cell is absent.
    std::span<const std::uint32_t> faces_near(const Vec<D>& x) const {
        auto it = cells_.find(cell_coordinates(x, cell_size_));
        if (it == cells_.end()) return {};
        return it->second;
    }

    double mean_faces_per_cell() const {
        if (cells_.empty()) return 0.0;
        std::size_t total = 0;
        for (const auto& [k, v] : cells_) total += v.size();
        return static_cast<double>(total) / static_cast<double>(cells_.size());
    }

private:
    double cell_size_ = 0.0;
    Cells cells_;
};

template <int D>
FaceGrid<D> build_face_grid(const Geometry<D>& g, double search_radius) {
    return FaceGrid<D>(g, search_radius);
}

template <int D>
std::span<const std::uint32_t> faces_near(const FaceGrid<D>& grid, const Vec<D>& x) {
    return grid.faces_near(x);
}

}  // namespace bodyfit

#endif  // BODYFIT_FACE_GRID_HPP
