#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stubmatch/errors.hpp"
#include "stubmatch/geometry.hpp"
#include "stubmatch/rng.hpp"

namespace stubmatch {

enum class DegreeFamily { deterministic, geometric, poisson, zipf, explicit_pmf };

enum class MomentVerdict { finite, infinite };

struct MomentResult {
    double value;           // sum over the tabulated (cut off) support
    MomentVerdict verdict;  // verdict for the uncapped law
};

// Degree distribution on the non-negative integers, held as a normalized pmf
// table over a finite support. Parametric families with unbounded support are
// cut off at a configurable point (zipf) or where the tail mass drops below
// numerical noise (geometric, poisson); divergence verdicts for zipf use the
// analytic exponent test on the uncapped law.
class DegreeDistribution {
public:
    static constexpr std::uint64_t default_zipf_cutoff = 1000000;

    static DegreeDistribution deterministic(std::uint32_t u) {
        DegreeDistribution d;
        d.family_ = DegreeFamily::deterministic;
        d.det_u_ = u;
        std::vector<long double> w(static_cast<std::size_t>(u) + 1, 0.0L);
        w[u] = 1.0L;
        d.finish(std::move(w));
        return d;
    }

    static DegreeDistribution geometric(double q) {
        if (!(q > 0.0 && q < 1.0))
            throw invalid_parameter("geometric: q must lie in (0, 1)");
        DegreeDistribution d;
        d.family_ = DegreeFamily::geometric;
        d.param_ = q;
        // P(D = i) = (1 - q) q^i; stop once the remaining tail is negligible.
        const std::size_t n_max =
            static_cast<std::size_t>(std::ceil(std::log(1e-15) / std::log(q))) + 1;
        if (n_max > (1u << 24))
            throw invalid_parameter("geometric: q too close to 1 for tabulation");
        std::vector<long double> w(n_max + 1);
        long double term = 1.0L - static_cast<long double>(q);
        for (std::size_t i = 0; i <= n_max; ++i) {
            w[i] = term;
            term *= q;
        }
        d.finish(std::move(w));
        return d;
    }

    static DegreeDistribution poisson(double mu) {
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw invalid_parameter("poisson: mu must be positive and finite");
        if (mu > 1e6) throw invalid_parameter("poisson: mu too large for tabulation");
        DegreeDistribution d;
        d.family_ = DegreeFamily::poisson;
        d.param_ = mu;
        std::vector<long double> w;
        long double term = std::exp(static_cast<long double>(-mu));
        long double acc = 0.0L;
        for (std::size_t i = 0;; ++i) {
            w.push_back(term);
            acc += term;
            if (i > static_cast<std::size_t>(mu) && 1.0L - acc < 1e-16L) break;
            term *= static_cast<long double>(mu) / static_cast<long double>(i + 1);
        }
        d.finish(std::move(w));
        return d;
    }

    // P(D = i) proportional to i^-tau on 1..cutoff. When no cutoff is given
    // the default one is used for the table, but max_support() reports the
    // law as unbounded.
    static DegreeDistribution zipf(double tau, std::optional<std::uint64_t> cutoff = {}) {
        if (!(tau > 1.0) || !std::isfinite(tau))
            throw invalid_parameter("zipf: tau must be greater than 1");
        const std::uint64_t cap = cutoff.value_or(default_zipf_cutoff);
        if (cap < 1 || cap > 100000000)
            throw invalid_parameter("zipf: cutoff out of range");
        DegreeDistribution d;
        d.family_ = DegreeFamily::zipf;
        d.param_ = tau;
        d.user_capped_ = cutoff.has_value();
        std::vector<long double> w(static_cast<std::size_t>(cap) + 1, 0.0L);
        for (std::size_t i = 1; i <= cap; ++i)
            w[i] = std::pow(static_cast<long double>(i), static_cast<long double>(-tau));
        d.finish(std::move(w));
        return d;
    }

    static DegreeDistribution explicit_pmf(const std::vector<std::pair<std::uint32_t, double>>& entries) {
        if (entries.empty()) throw invalid_parameter("explicit pmf: no entries");
        std::uint32_t top = 0;
        for (const auto& [i, p] : entries) {
            if (!(p >= 0.0) || !std::isfinite(p))
                throw invalid_parameter("explicit pmf: probabilities must be non-negative");
            top = std::max(top, i);
        }
        if (top > (1u << 24)) throw invalid_parameter("explicit pmf: support too large");
        std::vector<long double> w(static_cast<std::size_t>(top) + 1, 0.0L);
        long double sum = 0.0L;
        for (const auto& [i, p] : entries) {
            w[i] += p;
            sum += p;
        }
        if (std::fabs(static_cast<double>(sum) - 1.0) > 1e-6)
            throw invalid_parameter("explicit pmf: probabilities must sum to 1");
        DegreeDistribution d;
        d.family_ = DegreeFamily::explicit_pmf;
        d.finish(std::move(w));
        return d;
    }

    DegreeFamily family() const { return family_; }
    double param() const { return param_; }
    std::uint32_t deterministic_value() const { return det_u_; }

    double pmf(std::uint64_t i) const { return i < pmf_.size() ? pmf_[i] : 0.0; }

    // P(D >= i); non-increasing, tail_prob(0) == 1.
    double tail_prob(std::uint64_t i) const { return i < tail_.size() ? tail_[i] : 0.0; }

    // Sum of i^alpha over the tabulated support, plus the uncapped verdict.
    MomentResult moment(double alpha) const {
        if (!(alpha > 0.0)) throw invalid_parameter("moment: alpha must be positive");
        long double acc = 0.0L;
        for (std::size_t i = 1; i < pmf_.size(); ++i)
            if (pmf_[i] > 0.0)
                acc += std::pow(static_cast<long double>(i), static_cast<long double>(alpha)) * pmf_[i];
        MomentVerdict verdict = MomentVerdict::finite;
        if (family_ == DegreeFamily::zipf && !(alpha - param_ < -1.0))
            verdict = MomentVerdict::infinite;
        return MomentResult{static_cast<double>(acc), verdict};
    }

    std::uint32_t sample(Rng& rng) const {
        const double u = rng.uniform01();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) return static_cast<std::uint32_t>(cdf_.size() - 1);
        return static_cast<std::uint32_t>(it - cdf_.begin());
    }

    // Largest value with positive mass; nullopt when the uncapped law is
    // unbounded (zipf without a requested cutoff).
    std::optional<std::uint32_t> max_support() const {
        if (family_ == DegreeFamily::zipf && !user_capped_) return std::nullopt;
        return table_max_;
    }

    // Largest tabulated value with positive mass, regardless of boundedness.
    std::uint32_t table_max() const { return table_max_; }

    const std::vector<double>& pmf_table() const { return pmf_; }

private:
    DegreeDistribution() = default;

    void finish(std::vector<long double> w) {
        long double sum = 0.0L;
        for (long double x : w) {
            if (x < 0.0L) throw invalid_parameter("degree pmf: negative mass");
            sum += x;
        }
        if (!(sum > 0.0L)) throw invalid_parameter("degree pmf: zero total mass");
        pmf_.resize(w.size());
        cdf_.resize(w.size());
        tail_.resize(w.size());
        long double acc = 0.0L;
        for (std::size_t i = 0; i < w.size(); ++i) {
            pmf_[i] = static_cast<double>(w[i] / sum);
            acc += w[i] / sum;
            cdf_[i] = static_cast<double>(acc);
        }
        cdf_.back() = 1.0;
        long double tail = 0.0L;
        for (std::size_t i = w.size(); i-- > 0;) {
            tail += w[i] / sum;
            tail_[i] = static_cast<double>(tail);
        }
        tail_[0] = 1.0;
        table_max_ = 0;
        for (std::size_t i = w.size(); i-- > 0;)
            if (pmf_[i] > 0.0) {
                table_max_ = static_cast<std::uint32_t>(i);
                break;
            }
    }

    DegreeFamily family_ = DegreeFamily::deterministic;
    double param_ = 0.0;
    std::uint32_t det_u_ = 0;
    bool user_capped_ = false;
    std::uint32_t table_max_ = 0;
    std::vector<double> pmf_, cdf_, tail_;
};

inline double tail_prob(const DegreeDistribution& dist, std::uint64_t i) {
    return dist.tail_prob(i);
}

inline MomentResult moment(const DegreeDistribution& dist, double alpha) {
    return dist.moment(alpha);
}

inline std::uint32_t sample_degree(const DegreeDistribution& dist, Rng& rng) {
    return dist.sample(rng);
}

inline std::optional<std::uint32_t> max_support(const DegreeDistribution& dist) {
    return dist.max_support();
}

// Poisson points plus one iid degree mark per point (the stub configuration).
struct MarkedPointSet {
    PointSet points;
    std::vector<std::uint32_t> degrees;

    std::size_t size() const { return points.size(); }

    std::uint32_t max_degree() const {
        std::uint32_t m = 0;
        for (auto d : degrees) m = std::max(m, d);
        return m;
    }

    std::uint64_t total_stubs() const {
        std::uint64_t s = 0;
        for (auto d : degrees) s += d;
        return s;
    }
};

// Marks are drawn in point-index order, independent of positions.
inline MarkedPointSet mark_points(const PointSet& points, const DegreeDistribution& dist,
                                  Rng& rng) {
    MarkedPointSet out;
    out.points = points;
    out.degrees.resize(points.size());
    for (auto& d : out.degrees) d = dist.sample(rng);
    return out;
}

}  // namespace stubmatch
