#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <utility>
#include <vector>

#include "stubmatch/geometry.hpp"

namespace stubmatch {

// Uniform bucket grid over the box, sized at roughly one point per cell.
// Queries expand outward in Chebyshev shells of cells; a shell at index r can
// only contain points at metric distance >= (r-1) * cell side, which gives the
// stopping rule. The same bound holds in euclidean_window mode because the
// Euclidean distance dominates the torus one.
//
// All orderings are lexicographic on (distance, point index), matching the
// global tie-break rule, so results are reproducible and shift-equivariant.
class GridIndex {
public:
    GridIndex(const SimDomain& domain, const PointSet& points)
        : dom_(&domain), pts_(&points) {
        const std::size_t n = points.size();
        nc_ = 1;
        if (n > 1) {
            nc_ = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 1.0 / domain.dim)));
            if (nc_ < 1) nc_ = 1;
        }
        cell_ = domain.side / nc_;
        std::size_t total = 1;
        for (int k = 0; k < domain.dim; ++k) total *= static_cast<std::size_t>(nc_);
        cell_start_.assign(total + 1, 0);
        items_.resize(n);
        std::vector<std::uint32_t> cnt(total, 0);
        std::vector<std::size_t> cell_of(n);
        for (std::size_t i = 0; i < n; ++i) {
            cell_of[i] = cell_index(points.coords[i]);
            ++cnt[cell_of[i]];
        }
        for (std::size_t c = 0; c < total; ++c) cell_start_[c + 1] = cell_start_[c] + cnt[c];
        std::vector<std::uint32_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            items_[cursor[cell_of[i]]++] = static_cast<std::uint32_t>(i);
    }

    const SimDomain& domain() const { return *dom_; }
    const PointSet& points() const { return *pts_; }
    double cell_side() const { return cell_; }

    // Nearest eligible point to q, excluding `self`, by (distance, index).
    template <class Pred>
    std::optional<std::pair<double, std::uint32_t>> nearest(const Position& q,
                                                            std::optional<std::uint32_t> self,
                                                            Pred&& pred) const {
        double best_d2 = std::numeric_limits<double>::infinity();
        std::uint32_t best_id = std::numeric_limits<std::uint32_t>::max();
        bool found = false;
        auto consider = [&](std::size_t cell) {
            for (std::uint32_t s = cell_start_[cell]; s < cell_start_[cell + 1]; ++s) {
                const std::uint32_t id = items_[s];
                if (self && *self == id) continue;
                if (!pred(id)) continue;
                const double d2 = dom_->distance2(q, pts_->coords[id]);
                if (d2 < best_d2 || (d2 == best_d2 && id < best_id)) {
                    best_d2 = d2;
                    best_id = id;
                    found = true;
                }
            }
        };
        int c0[3];
        cell_coords(q, c0);
        const int rclean = (nc_ - 1) / 2;
        for (int r = 0;; ++r) {
            bool all_scanned = false;
            if (r <= rclean) {
                for_each_shell(c0, r, consider);
            } else {
                terminal_sweep(c0, rclean, consider);
                all_scanned = true;
            }
            const double bound = static_cast<double>(r) * cell_;
            if (found && best_d2 < bound * bound) break;
            if (all_scanned) break;
        }
        if (!found) return std::nullopt;
        return std::make_pair(std::sqrt(best_d2), best_id);
    }

    // Up to k nearest eligible points, ascending by (distance, index).
    template <class Pred>
    std::vector<std::pair<double, std::uint32_t>> k_nearest(const Position& q, std::size_t k,
                                                            std::optional<std::uint32_t> self,
                                                            Pred&& pred) const {
        std::vector<std::pair<double, std::uint32_t>> heap;  // max-heap on (d2, id)
        if (k == 0) return heap;
        auto consider = [&](std::size_t cell) {
            for (std::uint32_t s = cell_start_[cell]; s < cell_start_[cell + 1]; ++s) {
                const std::uint32_t id = items_[s];
                if (self && *self == id) continue;
                if (!pred(id)) continue;
                const double d2 = dom_->distance2(q, pts_->coords[id]);
                const std::pair<double, std::uint32_t> cand{d2, id};
                if (heap.size() < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end());
                } else if (cand < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
        };
        int c0[3];
        cell_coords(q, c0);
        const int rclean = (nc_ - 1) / 2;
        for (int r = 0;; ++r) {
            bool all_scanned = false;
            if (r <= rclean) {
                for_each_shell(c0, r, consider);
            } else {
                terminal_sweep(c0, rclean, consider);
                all_scanned = true;
            }
            const double bound = static_cast<double>(r) * cell_;
            if (heap.size() == k && heap.front().first < bound * bound) break;
            if (all_scanned) break;
        }
        std::sort_heap(heap.begin(), heap.end());
        for (auto& e : heap) e.first = std::sqrt(e.first);
        return heap;
    }

    // Lazily yields eligible points in ascending (distance, index) order. The
    // predicate is evaluated when an entry is popped, so it may change between
    // calls (already-yielded entries are gone either way).
    class Stream {
    public:
        Stream(const GridIndex& g, const Position& q, std::optional<std::uint32_t> self)
            : g_(&g), q_(q), self_(self) {}

        template <class Pred>
        std::optional<std::pair<double, std::uint32_t>> next(Pred&& pred) {
            for (;;) {
                if (!heap_.empty()) {
                    const double bound = static_cast<double>(r_done_) * g_->cell_;
                    if (all_scanned_ || heap_.top().first < bound * bound) {
                        auto top = heap_.top();
                        heap_.pop();
                        if (!pred(top.second)) continue;
                        return std::make_pair(std::sqrt(top.first), top.second);
                    }
                } else if (all_scanned_) {
                    return std::nullopt;
                }
                scan_next_shell();
            }
        }

    private:
        void scan_next_shell() {
            const int rclean = (g_->nc_ - 1) / 2;
            auto consider = [&](std::size_t cell) {
                for (std::uint32_t s = g_->cell_start_[cell]; s < g_->cell_start_[cell + 1]; ++s) {
                    const std::uint32_t id = g_->items_[s];
                    if (self_ && *self_ == id) continue;
                    heap_.emplace(g_->dom_->distance2(q_, g_->pts_->coords[id]), id);
                }
            };
            int c0[3];
            g_->cell_coords(q_, c0);
            const int r = r_done_ + 1;
            if (r <= rclean) {
                g_->for_each_shell(c0, r, consider);
            } else {
                g_->terminal_sweep(c0, rclean, consider);
                all_scanned_ = true;
            }
            r_done_ = r;
        }

        using Entry = std::pair<double, std::uint32_t>;
        const GridIndex* g_;
        Position q_;
        std::optional<std::uint32_t> self_;
        int r_done_ = -1;
        bool all_scanned_ = false;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap_;
    };

    Stream stream(const Position& q, std::optional<std::uint32_t> self) const {
        return Stream(*this, q, self);
    }

private:
    void cell_coords(const Position& p, int out[3]) const {
        out[0] = out[1] = out[2] = 0;
        for (int k = 0; k < dom_->dim; ++k) {
            int c = static_cast<int>(p[k] / cell_);
            if (c >= nc_) c = nc_ - 1;
            if (c < 0) c = 0;
            out[k] = c;
        }
    }

    std::size_t cell_index(const Position& p) const {
        int c[3];
        cell_coords(p, c);
        return lin(c[0], c[1], c[2]);
    }

    std::size_t lin(int cx, int cy, int cz) const {
        switch (dom_->dim) {
            case 1: return static_cast<std::size_t>(cx);
            case 2: return static_cast<std::size_t>(cy) * nc_ + cx;
            default:
                return (static_cast<std::size_t>(cz) * nc_ + cy) * nc_ + cx;
        }
    }

    int wrapc(int c) const {
        c %= nc_;
        return c < 0 ? c + nc_ : c;
    }

    // Cells at wrapped Chebyshev distance exactly r; distinct while 2r+1 <= nc.
    template <class F>
    void for_each_shell(const int c0[3], int r, F&& f) const {
        if (r == 0) {
            f(lin(c0[0], c0[1], c0[2]));
            return;
        }
        const int d = dom_->dim;
        if (d == 1) {
            f(lin(wrapc(c0[0] - r), 0, 0));
            f(lin(wrapc(c0[0] + r), 0, 0));
        } else if (d == 2) {
            for (int ox = -r; ox <= r; ++ox) {
                f(lin(wrapc(c0[0] + ox), wrapc(c0[1] - r), 0));
                f(lin(wrapc(c0[0] + ox), wrapc(c0[1] + r), 0));
            }
            for (int oy = -r + 1; oy <= r - 1; ++oy) {
                f(lin(wrapc(c0[0] - r), wrapc(c0[1] + oy), 0));
                f(lin(wrapc(c0[0] + r), wrapc(c0[1] + oy), 0));
            }
        } else {
            for (int ox = -r; ox <= r; ++ox)
                for (int oy = -r; oy <= r; ++oy) {
                    f(lin(wrapc(c0[0] + ox), wrapc(c0[1] + oy), wrapc(c0[2] - r)));
                    f(lin(wrapc(c0[0] + ox), wrapc(c0[1] + oy), wrapc(c0[2] + r)));
                }
            for (int oz = -r + 1; oz <= r - 1; ++oz) {
                for (int ox = -r; ox <= r; ++ox) {
                    f(lin(wrapc(c0[0] + ox), wrapc(c0[1] - r), wrapc(c0[2] + oz)));
                    f(lin(wrapc(c0[0] + ox), wrapc(c0[1] + r), wrapc(c0[2] + oz)));
                }
                for (int oy = -r + 1; oy <= r - 1; ++oy) {
                    f(lin(wrapc(c0[0] - r), wrapc(c0[1] + oy), wrapc(c0[2] + oz)));
                    f(lin(wrapc(c0[0] + r), wrapc(c0[1] + oy), wrapc(c0[2] + oz)));
                }
            }
        }
    }

    int wrapped_axis_dist(int a, int b) const {
        int d = std::abs(a - b);
        return std::min(d, nc_ - d);
    }

    // Every cell at wrapped Chebyshev distance > rclean, each exactly once.
    template <class F>
    void terminal_sweep(const int c0[3], int rclean, F&& f) const {
        const int d = dom_->dim;
        if (d == 1) {
            for (int cx = 0; cx < nc_; ++cx)
                if (wrapped_axis_dist(cx, c0[0]) > rclean) f(lin(cx, 0, 0));
        } else if (d == 2) {
            for (int cy = 0; cy < nc_; ++cy)
                for (int cx = 0; cx < nc_; ++cx) {
                    const int ch = std::max(wrapped_axis_dist(cx, c0[0]),
                                            wrapped_axis_dist(cy, c0[1]));
                    if (ch > rclean) f(lin(cx, cy, 0));
                }
        } else {
            for (int cz = 0; cz < nc_; ++cz)
                for (int cy = 0; cy < nc_; ++cy)
                    for (int cx = 0; cx < nc_; ++cx) {
                        const int ch = std::max({wrapped_axis_dist(cx, c0[0]),
                                                 wrapped_axis_dist(cy, c0[1]),
                                                 wrapped_axis_dist(cz, c0[2])});
                        if (ch > rclean) f(lin(cx, cy, cz));
                    }
        }
    }

    const SimDomain* dom_;
    const PointSet* pts_;
    int nc_;
    double cell_;
    std::vector<std::uint32_t> cell_start_;
    std::vector<std::uint32_t> items_;
};

// Lazily ranked neighbor sequence for one query point under a fixed
// eligibility mask. Holds its own grid; the domain and points must outlive it.
class SortedNeighbors {
public:
    SortedNeighbors(const SimDomain& domain, const PointSet& points, std::uint32_t query,
                    std::vector<std::uint8_t> mask)
        : mask_(std::move(mask)),
          grid_(domain, points),
          stream_(grid_.stream(points.coords.at(query), query)) {
        if (mask_.size() != points.size())
            throw invalid_parameter("neighbors_sorted: mask length must equal point count");
    }

    // The stream references the owned grid, so the object must stay put.
    SortedNeighbors(const SortedNeighbors&) = delete;
    SortedNeighbors& operator=(const SortedNeighbors&) = delete;

    std::optional<std::uint32_t> next() {
        auto e = stream_.next([&](std::uint32_t id) { return mask_[id] != 0; });
        if (!e) return std::nullopt;
        return e->second;
    }

    std::vector<std::uint32_t> drain() {
        std::vector<std::uint32_t> out;
        while (auto id = next()) out.push_back(*id);
        return out;
    }

private:
    std::vector<std::uint8_t> mask_;
    GridIndex grid_;
    GridIndex::Stream stream_;
};

inline SortedNeighbors neighbors_sorted(const SimDomain& domain, const PointSet& points,
                                        std::uint32_t query, std::vector<std::uint8_t> mask) {
    return SortedNeighbors(domain, points, query, std::move(mask));
}

}  // namespace stubmatch
