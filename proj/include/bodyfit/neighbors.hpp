#ifndef BODYFIT_NEIGHBORS_HPP
#define BODYFIT_NEIGHBORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "bodyfit/error.hpp"
#include "bodyfit/vec.hpp"

namespace bodyfit {

/// Dense uniform cell list over a point set, rebuilt from scratch on every update.
///
/// Points are stored sorted by cell so that each query visits contiguous memory.
/// `for_each_candidate` visits every point in the 3^D cells around the query; callers
/// filter by distance.
template <int D>
class CellList {
public:
    /// Upper bound on allocated cells; the cell size grows when the box would need more.
    static constexpr std::size_t max_cells = std::size_t{1} << 26;

    CellList() = default;
    CellList(std::span<const Vec<D>> points, double cell_size) { rebuild(points, cell_size); }

    void rebuild(std::span<const Vec<D>> points, double cell_size) {
        if (!(cell_size > 0.0)) throw Error("cell list: cell size must be positive");
        const std::size_t n = points.size();
        sorted_.resize(n);
        order_.resize(n);
        lo_ = Vec<D>::filled(0.0);
        Vec<D> hi = lo_;
        if (n > 0) {
            lo_ = hi = points[0];
            for (const auto& p : points) {
                lo_ = cwise_min(lo_, p);
                hi = cwise_max(hi, p);
            }
        }
        if (!all_finite(lo_) || !all_finite(hi)) throw NumericalError("cell list: non-finite particle position");

        cell_size_ = cell_size;
        for (;;) {
            std::size_t total = 1;
            for (int i = 0; i < D; ++i) {
                dims_[i] = static_cast<std::int64_t>(std::floor((hi[i] - lo_[i]) / cell_size_)) + 1;
                total *= static_cast<std::size_t>(dims_[i]);
            }
            if (total <= max_cells) break;
            cell_size_ *= 2.0;
        }
        inverse_ = 1.0 / cell_size_;
        std::size_t total = 1;
        for (int i = 0; i < D; ++i) total *= static_cast<std::size_t>(dims_[i]);

        std::vector<std::uint32_t> cell_of(n);
        start_.assign(total + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            cell_of[i] = static_cast<std::uint32_t>(linear(clamped_cell(points[i])));
            ++start_[cell_of[i] + 1];
        }
        for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
        std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) {
            const auto slot = fill[cell_of[i]]++;
            order_[slot] = static_cast<std::uint32_t>(i);
            sorted_[slot] = points[i];
        }
    }

    std::size_t size() const { return sorted_.size(); }
    double cell_size() const { return cell_size_; }

    /// f(original_index, position) for every point in the cells adjacent to x.
    template <typename F>
    void for_each_candidate(const Vec<D>& x, F&& f) const {
        if (sorted_.empty()) return;
        std::array<std::int64_t, D> lo, hi;
        for (int i = 0; i < D; ++i) {
            const double c = std::floor((x[i] - lo_[i]) * inverse_);
            if (!(c >= -1.0 && c <= static_cast<double>(dims_[i]))) return;
            const auto ci = static_cast<std::int64_t>(c);
            lo[i] = std::max<std::int64_t>(ci - 1, 0);
            hi[i] = std::min<std::int64_t>(ci + 1, dims_[i] - 1);
            if (lo[i] > hi[i]) return;
        }
        // The last axis is contiguous, so each row of 3 cells is one slice.
        auto visit_row = [&](std::int64_t base) {
            const auto b = static_cast<std::size_t>(base + lo[D - 1]);
            const auto e = static_cast<std::size_t>(base + hi[D - 1]);
            for (auto s = start_[b]; s < start_[e + 1]; ++s) f(static_cast<std::size_t>(order_[s]), sorted_[s]);
        };
        if constexpr (D == 1) {
            visit_row(0);
        } else if constexpr (D == 2) {
            for (auto a = lo[0]; a <= hi[0]; ++a) visit_row(a * dims_[1]);
        } else {
            for (auto a = lo[0]; a <= hi[0]; ++a)
                for (auto b = lo[1]; b <= hi[1]; ++b) visit_row((a * dims_[1] + b) * dims_[2]);
        }
    }

    /// Original indices in storage order (sorted by cell).
    std::span<const std::uint32_t> order() const { return order_; }

private:
    std::array<std::int64_t, D> clamped_cell(const Vec<D>& p) const {
        std::array<std::int64_t, D> c;
        for (int i = 0; i < D; ++i)
            c[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((p[i] - lo_[i]) * inverse_)), 0,
                                            dims_[i] - 1);
        return c;
    }

    std::int64_t linear(const std::array<std::int64_t, D>& c) const {
        std::int64_t k = 0;
        for (int i = 0; i < D; ++i) k = k * dims_[i] + c[i];
        return k;
    }

    Vec<D> lo_{};
    double cell_size_ = 1.0;
    double inverse_ = 1.0;
    std::array<std::int64_t, D> dims_{};
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> order_;
    std::vector<Vec<D>> sorted_;
};

}  // namespace bodyfit

#endif  // BODYFIT_NEIGHBORS_HPP
