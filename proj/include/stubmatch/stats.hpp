#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "stubmatch/schemes.hpp"
#include "stubmatch/theory.hpp"

namespace stubmatch {

// Estimation window. On the torus every point is exchangeable, so the full
// window is unbiased; in euclidean_window mode an interior margin keeps
// boundary-truncated edges out of the average.
struct Window {
    bool interior = false;
    double margin = 0.0;
};

inline Window default_window(const SimDomain& domain, const MarkedPointSet& marked,
                             double intensity) {
    if (domain.boundary == Boundary::torus) return Window{};
    const std::uint32_t dmax = std::max<std::uint32_t>(marked.max_degree(), 1);
    double margin = 3.0 * theory::expected_rn(dmax, intensity, domain.dim);
    margin = std::min(margin, 0.45 * domain.side);
    return Window{true, margin};
}

inline bool in_window(const SimDomain& domain, const Window& w, const Position& p) {
    if (!w.interior) return true;
    for (int k = 0; k < domain.dim; ++k)
        if (p[k] < w.margin || domain.side - p[k] < w.margin) return false;
    return true;
}

// Total incident edge length per point.
inline std::vector<double> per_point_total_length(const SimDomain& domain,
                                                  const MarkedPointSet& marked,
                                                  const Pairing& pairing) {
    std::vector<double> t(marked.size(), 0.0);
    for (const auto& e : pairing.edges) {
        const double len = domain.distance(marked.points.coords[e.a], marked.points.coords[e.b]);
        t[e.a] += len;
        t[e.b] += len;
    }
    return t;
}

struct PalmStats {
    std::vector<double> t_samples;
    double mean = 0.0;
    double stderr_naive = 0.0;  // per-point, ignores within-realization dependence
    std::size_t count = 0;
    Window window;
};

// Average of T over window points; on the torus this is the point-stationary
// mean. Within-run standard error is indicative only; aggregate across
// replicate means for honest uncertainty.
inline PalmStats palm_mean_T(const SimDomain& domain, const MarkedPointSet& marked,
                             const Pairing& pairing, const Window& window) {
    PalmStats out;
    out.window = window;
    auto t = per_point_total_length(domain, marked, pairing);
    for (std::size_t p = 0; p < marked.size(); ++p)
        if (in_window(domain, window, marked.points.coords[p]))
            out.t_samples.push_back(t[p]);
    out.count = out.t_samples.size();
    if (out.count == 0) return out;
    out.mean = std::accumulate(out.t_samples.begin(), out.t_samples.end(), 0.0) /
               static_cast<double>(out.count);
    if (out.count > 1) {
        double ss = 0.0;
        for (double v : out.t_samples) ss += (v - out.mean) * (v - out.mean);
        out.stderr_naive = std::sqrt(ss / (static_cast<double>(out.count) - 1.0) /
                                     static_cast<double>(out.count));
    }
    return out;
}

struct HCurve {
    std::vector<double> r;
    std::vector<double> h;  // fraction of window points with T <= r, non-decreasing
    bool empty = false;
};

inline HCurve empirical_H(const SimDomain& domain, const MarkedPointSet& marked,
                          const Pairing& pairing, const Window& window,
                          const std::vector<double>& r_grid) {
    if (!std::is_sorted(r_grid.begin(), r_grid.end()))
        throw invalid_parameter("empirical_H: r grid must be sorted ascending");
    auto stats = palm_mean_T(domain, marked, pairing, window);
    HCurve out;
    out.r = r_grid;
    if (stats.count == 0) {
        out.empty = true;
        out.h.assign(r_grid.size(), 0.0);
        return out;
    }
    std::sort(stats.t_samples.begin(), stats.t_samples.end());
    out.h.reserve(r_grid.size());
    for (double r : r_grid) {
        const auto it = std::upper_bound(stats.t_samples.begin(), stats.t_samples.end(), r);
        out.h.push_back(static_cast<double>(it - stats.t_samples.begin()) /
                        static_cast<double>(stats.count));
    }
    return out;
}

struct LevelEdgeStats {
    std::size_t count = 0;
    double mean_length = 0.0;
    std::vector<double> lengths;  // survival samples
};

inline LevelEdgeStats level_edge_stats(const SimDomain& domain, const MarkedPointSet& marked,
                                       const Pairing& pairing, std::uint32_t level,
                                       std::optional<Stage> stage = {}) {
    LevelEdgeStats out;
    for (const auto& e : pairing.edges) {
        if (e.level != level) continue;
        if (stage && e.stage != *stage) continue;
        out.lengths.push_back(
            domain.distance(marked.points.coords[e.a], marked.points.coords[e.b]));
    }
    out.count = out.lengths.size();
    if (out.count > 0)
        out.mean_length = std::accumulate(out.lengths.begin(), out.lengths.end(), 0.0) /
                          static_cast<double>(out.count);
    return out;
}

struct TailFit {
    double slope = 0.0;
    bool degenerate = false;
};

// Least-squares slope of log survival against log r over [r_lo, r_hi], on a
// logarithmic grid; grid points with no exceedances are dropped.
inline TailFit tail_exponent(const std::vector<double>& samples, double r_lo, double r_hi) {
    if (!(r_lo > 0.0) || !(r_hi > r_lo))
        throw invalid_parameter("tail_exponent: need 0 < r_lo < r_hi");
    std::size_t above = 0;
    for (double v : samples)
        if (v > r_lo) ++above;
    if (above < 1000)
        throw insufficient_data("tail_exponent: fewer than 1000 samples exceed the range start");
    const double lo = *std::min_element(samples.begin(), samples.end());
    const double hi = *std::max_element(samples.begin(), samples.end());
    if (lo == hi) return TailFit{0.0, true};

    constexpr int grid_n = 16;
    std::vector<double> xs, ys;
    const double total = static_cast<double>(samples.size());
    for (int g = 0; g < grid_n; ++g) {
        const double r =
            std::exp(std::log(r_lo) + (std::log(r_hi) - std::log(r_lo)) * g / (grid_n - 1.0));
        std::size_t exceed = 0;
        for (double v : samples)
            if (v > r) ++exceed;
        if (exceed == 0) continue;
        xs.push_back(std::log(r));
        ys.push_back(std::log(static_cast<double>(exceed) / total));
    }
    if (xs.size() < 2) return TailFit{0.0, true};
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) return TailFit{0.0, true};
    return TailFit{sxy / sxx, false};
}

// Connected component sizes of the generated graph (diagnostic).
inline std::map<std::size_t, std::size_t> component_sizes(const MarkedPointSet& marked,
                                                          const Pairing& pairing) {
    const std::size_t n = marked.size();
    std::vector<std::uint32_t> parent(n);
    for (std::uint32_t i = 0; i < n; ++i) parent[i] = i;
    std::vector<std::uint32_t> rank(n, 0);
    auto find = [&parent](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (const auto& e : pairing.edges) {
        auto ra = find(e.a), rb = find(e.b);
        if (ra == rb) continue;
        if (rank[ra] < rank[rb]) std::swap(ra, rb);
        parent[rb] = ra;
        if (rank[ra] == rank[rb]) ++rank[ra];
    }
    std::vector<std::size_t> size_of(n, 0);
    for (std::uint32_t i = 0; i < n; ++i) ++size_of[find(i)];
    std::map<std::size_t, std::size_t> hist;
    for (std::uint32_t i = 0; i < n; ++i)
        if (size_of[i] > 0) ++hist[size_of[i]];
    return hist;
}

}  // namespace stubmatch
