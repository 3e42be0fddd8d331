#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "stubmatch/errors.hpp"
#include "stubmatch/rng.hpp"

namespace stubmatch {

enum class Boundary { torus, euclidean_window };

// Coordinates beyond the active dimension stay zero.
using Position = std::array<double, 3>;

inline Position make_position(double x, double y = 0.0, double z = 0.0) {
    return Position{x, y, z};
}

// Finite box [0, side)^dim with either a periodic (torus) metric or the plain
// Euclidean one. The torus is the default: it makes every point exchangeable,
// so averages over points estimate point-stationary quantities directly.
struct SimDomain {
    SimDomain(int dim_, double side_, Boundary boundary_ = Boundary::torus)
        : dim(dim_), side(side_), boundary(boundary_) {
        if (dim < 1 || dim > 3)
            throw invalid_parameter("SimDomain: dim must be 1, 2 or 3");
        if (!(side > 0.0) || !std::isfinite(side))
            throw invalid_parameter("SimDomain: side must be positive and finite");
    }

    int dim;
    double side;
    Boundary boundary;

    double volume() const {
        double v = 1.0;
        for (int k = 0; k < dim; ++k) v *= side;
        return v;
    }

    double wrap(double x) const {
        double w = std::fmod(x, side);
        if (w < 0.0) w += side;
        if (w >= side) w -= side;
        if (w < 0.0) w = 0.0;
        return w;
    }

    Position wrap(const Position& p) const {
        Position out{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k) out[k] = wrap(p[k]);
        return out;
    }

    double axis_delta(double a, double b) const {
        double d = std::fabs(a - b);
        if (boundary == Boundary::torus) d = std::min(d, side - d);
        return d;
    }

    double distance2(const Position& a, const Position& b) const {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double d = axis_delta(a[k], b[k]);
            s += d * d;
        }
        return s;
    }

    double distance(const Position& a, const Position& b) const {
        return std::sqrt(distance2(a, b));
    }
};

struct PointSet {
    std::vector<Position> coords;
    std::size_t size() const { return coords.size(); }
    bool empty() const { return coords.empty(); }
};

// Homogeneous Poisson sample on the box: Poisson(intensity * volume) count,
// positions iid uniform.
inline PointSet sample_poisson(const SimDomain& domain, double intensity, Rng& rng) {
    if (!(intensity > 0.0) || !std::isfinite(intensity))
        throw invalid_parameter("sample_poisson: intensity must be positive and finite");
    const double mean = intensity * domain.volume();
    if (mean > 1e9)
        throw invalid_parameter("sample_poisson: expected count exceeds 1e9");
    const long long n = rng.poisson(mean);
    PointSet out;
    out.coords.resize(static_cast<std::size_t>(n), Position{0.0, 0.0, 0.0});
    for (auto& p : out.coords)
        for (int k = 0; k < domain.dim; ++k) p[k] = rng.uniform01() * domain.side;
    return out;
}

// Number of points within distance r of center, optionally excluding one index.
inline std::size_t count_in_ball(const SimDomain& domain, const PointSet& points,
                                 const Position& center, double r,
                                 std::optional<std::uint32_t> exclude = {}) {
    if (!(r >= 0.0)) throw invalid_parameter("count_in_ball: r must be non-negative");
    const double r2 = r * r;
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (exclude && *exclude == i) continue;
        if (domain.distance2(center, points.coords[i]) <= r2) ++count;
    }
    return count;
}

// k-th smallest distance from center to the eligible points.
inline double kth_nearest_distance(const SimDomain& domain, const PointSet& points,
                                   const Position& center, std::size_t k,
                                   std::optional<std::uint32_t> exclude = {}) {
    if (k == 0) throw invalid_parameter("kth_nearest_distance: k must be positive");
    std::vector<double> d2;
    d2.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (exclude && *exclude == i) continue;
        d2.push_back(domain.distance2(center, points.coords[i]));
    }
    if (k > d2.size())
        throw insufficient_points("kth_nearest_distance: k exceeds eligible point count");
    std::nth_element(d2.begin(), d2.begin() + (k - 1), d2.end());
    return std::sqrt(d2[k - 1]);
}

}  // namespace stubmatch
