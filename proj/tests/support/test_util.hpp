#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <vector>

#include "stubmatch/geometry.hpp"
#include "stubmatch/schemes.hpp"

namespace testutil {

// Regularized upper incomplete gamma Q(a, x), series / continued fraction.
inline double gammaq(double a, double x) {
    if (x < 0.0 || a <= 0.0) return 0.0;
    if (x == 0.0) return 1.0;
    const double gln = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int i = 0; i < 500; ++i) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::fabs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_pvalue(double stat, double df) { return gammaq(df / 2.0, stat / 2.0); }

// Chi-square goodness of fit of observed counts against expected counts,
// lumping bins until every expected count is at least 5. Returns the p-value.
inline double chi_square_gof(const std::vector<double>& observed,
                             const std::vector<double>& expected) {
    double stat = 0.0;
    int bins = 0;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        obs_acc += observed[i];
        exp_acc += expected[i];
        if (exp_acc >= 5.0) {
            stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
            ++bins;
            obs_acc = exp_acc = 0.0;
        }
    }
    if (exp_acc > 0.0) {
        stat += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
        ++bins;
    }
    return chi_square_pvalue(stat, bins - 1.0);
}

inline double poisson_pmf(double mean, std::uint64_t k) {
    return std::exp(k * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0));
}

inline stubmatch::PointSet points_1d(std::initializer_list<double> xs) {
    stubmatch::PointSet ps;
    for (double x : xs) ps.coords.push_back(stubmatch::make_position(x));
    return ps;
}

inline std::vector<std::uint8_t> all_mask(std::size_t n, bool value = true) {
    return std::vector<std::uint8_t>(n, value ? 1 : 0);
}

// Sorted (a, b) pairs of a pairing's edges, for set comparisons.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> edge_pairs(
    const stubmatch::Pairing& p) {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (const auto& e : p.edges) out.emplace_back(e.a, e.b);
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, int>> edge_records(
    const stubmatch::Pairing& p) {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t, int>> out;
    for (const auto& e : p.edges)
        out.emplace_back(e.a, e.b, e.level, static_cast<int>(e.stage));
    std::sort(out.begin(), out.end());
    return out;
}

// Brute-force k nearest by (distance, index); oracle for the grid index.
inline std::vector<std::pair<double, std::uint32_t>> knn_brute(
    const stubmatch::SimDomain& dom, const stubmatch::PointSet& pts,
    const stubmatch::Position& q, std::size_t k, std::optional<std::uint32_t> self) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
        if (self && *self == i) continue;
        all.emplace_back(dom.distance(q, pts.coords[i]), i);
    }
    std::sort(all.begin(), all.end());
    if (all.size() > k) all.resize(k);
    return all;
}

}  // namespace testutil
