#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stubmatch/degrees.hpp"
#include "stubmatch/errors.hpp"

namespace stubmatch {
namespace theory {

// Volume of the unit ball: 2, pi, 4pi/3.
inline double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return 3.14159265358979323846;
        case 3: return 4.0 * 3.14159265358979323846 / 3.0;
        default: throw invalid_parameter("unit_ball_volume: d must be 1, 2 or 3");
    }
}

// Mean distance from the origin to the n-th nearest point of a rate-lambda
// Poisson process: lambda * c * R_n^d is Gamma(n, 1), so
// E[R_n] = Gamma(n + 1/d) / Gamma(n) * (lambda c)^(-1/d).
inline double expected_rn(std::uint32_t n, double lambda, int d) {
    if (n < 1) throw invalid_parameter("expected_rn: n must be positive");
    if (!(lambda > 0.0)) throw invalid_parameter("expected_rn: lambda must be positive");
    const double c = unit_ball_volume(d);
    const double inv_d = 1.0 / d;
    return std::exp(std::lgamma(n + inv_d) - std::lgamma(static_cast<double>(n))) *
           std::pow(lambda * c, -inv_d);
}

// Same quantity as a survival-function sum,
//   (c^(-1/d) / d) * lambda^(-1/d) * sum_{k=0}^{n-1} Gamma(k + 1/d) / Gamma(k + 1),
// which telescopes to the closed form exactly. Kept as an independent route.
inline double expected_rn_series(std::uint32_t n, double lambda, int d) {
    if (n < 1) throw invalid_parameter("expected_rn_series: n must be positive");
    if (!(lambda > 0.0)) throw invalid_parameter("expected_rn_series: lambda must be positive");
    const double c = unit_ball_volume(d);
    const double inv_d = 1.0 / d;
    double term = std::exp(std::lgamma(inv_d));  // Gamma(0 + 1/d) / Gamma(1)
    double sum = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) {
        sum += term;
        term *= (k + inv_d) / (k + 1.0);
    }
    return sum * std::pow(c, -inv_d) / d * std::pow(lambda, -inv_d);
}

// Mean total edge length per vertex under SAM with maximum degree u: u^2.
inline double sam_expected_total(std::uint32_t u) {
    if (u < 1) throw invalid_parameter("sam_expected_total: u must be positive");
    return static_cast<double>(u) * static_cast<double>(u);
}

// Partial sums S(N) = sum_{n<=N} (sum_{i<=n} p_{i+}^(-1/d)) p_n of the lower
// bound on the mean total edge length under per-level matching, with the
// unknown dimensional constant set to 1. Divergence shows up as unbounded
// growth of the partial sums, so only growth ratios are meaningful.
inline std::vector<double> rsmc_lower_bound_partial(const DegreeDistribution& dist, int d,
                                                    std::uint32_t N) {
    if (N < 1) throw invalid_parameter("rsmc_lower_bound_partial: N must be positive");
    if (d < 1 || d > 3) throw invalid_parameter("rsmc_lower_bound_partial: d must be 1, 2 or 3");
    std::vector<double> s(N);
    long double inner = 0.0L;
    long double total = 0.0L;
    const long double inv_d = 1.0L / d;
    for (std::uint32_t n = 1; n <= N; ++n) {
        const double tail = dist.tail_prob(n);
        if (tail > 0.0)
            inner += std::pow(static_cast<long double>(tail), -inv_d);
        const double pn = dist.pmf(n);
        if (pn > 0.0) total += inner * pn;
        s[n - 1] = static_cast<double>(total);
    }
    return s;
}

// Finite/infinite verdict for the moment of order (d+1)/d.
inline MomentVerdict moment_condition(const DegreeDistribution& dist, int d) {
    if (d < 1 || d > 3) throw invalid_parameter("moment_condition: d must be 1, 2 or 3");
    return dist.moment((d + 1.0) / d).verdict;
}

}  // namespace theory
}  // namespace stubmatch
