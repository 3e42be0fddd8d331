#include <catch2/catch_amalgamated.hpp>

#include "stubmatch/degrees.hpp"
#include "support/test_util.hpp"

using namespace stubmatch;

TEST_CASE("tail probabilities are suffix sums") {
    SECTION("deterministic") {
        auto d = DegreeDistribution::deterministic(3);
        CHECK(d.tail_prob(0) == 1.0);
        CHECK(d.tail_prob(2) == 1.0);
        CHECK(d.tail_prob(3) == 1.0);
        CHECK(d.tail_prob(4) == 0.0);
    }
    SECTION("explicit half-half") {
        auto d = DegreeDistribution::explicit_pmf({{1, 0.5}, {2, 0.5}});
        CHECK(d.tail_prob(2) == Catch::Approx(0.5));
        CHECK(d.tail_prob(1) == Catch::Approx(1.0));
    }
    SECTION("zipf support starts at 1") {
        auto d = DegreeDistribution::zipf(3.0, 1000000);
        CHECK(d.tail_prob(1) == 1.0);
        CHECK(d.pmf(0) == 0.0);
    }
}

TEST_CASE("tail_prob is non-increasing and matches fresh suffix sums") {
    for (auto d : {DegreeDistribution::geometric(0.6), DegreeDistribution::poisson(2.5),
                   DegreeDistribution::zipf(2.5, 5000)}) {
        const auto& pmf = d.pmf_table();
        long double suffix = 0.0L;
        std::vector<double> tails(pmf.size());
        for (std::size_t i = pmf.size(); i-- > 0;) {
            suffix += pmf[i];
            tails[i] = static_cast<double>(suffix);
        }
        double prev = d.tail_prob(0);
        CHECK(prev == 1.0);
        for (std::size_t i = 1; i < pmf.size(); ++i) {
            const double t = d.tail_prob(i);
            CHECK(t <= prev);
            CHECK(t == Catch::Approx(tails[i]).margin(1e-12));
            prev = t;
        }
    }
}

TEST_CASE("moments and divergence verdicts") {
    SECTION("point mass") {
        auto d = DegreeDistribution::deterministic(3);
        const auto m = d.moment(1.5);
        CHECK(m.value == Catch::Approx(std::pow(3.0, 1.5)).epsilon(1e-12));
        CHECK(m.verdict == MomentVerdict::finite);
    }
    SECTION("zipf tau=3 has a finite 3/2 moment") {
        auto d = DegreeDistribution::zipf(3.0);
        CHECK(d.moment(1.5).verdict == MomentVerdict::finite);
        // partial-sum stabilization oracle: sum_i i^{1.5-3} converges
        long double s1 = 0.0L, s2 = 0.0L;
        for (std::size_t i = 1; i <= 100000; ++i) {
            const long double t = std::pow((long double)i, 1.5L - 3.0L);
            s1 += t;
            if (i <= 10000) s2 += t;
        }
        CHECK(static_cast<double>(s1 / s2) < 1.01);
    }
    SECTION("zipf tau=2.4 has an infinite 3/2 moment") {
        auto d = DegreeDistribution::zipf(2.4);
        CHECK(d.moment(1.5).verdict == MomentVerdict::infinite);
        // partial sums keep growing without stabilizing
        long double s1 = 0.0L, s2 = 0.0L;
        for (std::size_t i = 1; i <= 100000; ++i) {
            const long double t = std::pow((long double)i, 1.5L - 2.4L);
            s1 += t;
            if (i <= 10000) s2 += t;
        }
        CHECK(static_cast<double>(s1 / s2) > 1.2);
    }
    SECTION("monotone in alpha") {
        for (auto d : {DegreeDistribution::geometric(0.5), DegreeDistribution::zipf(3.5, 10000),
                       DegreeDistribution::explicit_pmf({{0, 0.25}, {1, 0.25}, {4, 0.5}})}) {
            double prev = d.moment(0.5).value;
            for (double alpha : {1.0, 1.5, 2.0, 3.0}) {
                const double cur = d.moment(alpha).value;
                CHECK(cur >= prev - 1e-12);
                prev = cur;
            }
        }
    }
}

TEST_CASE("sampling follows the pmf") {
    Rng rng(123);
    SECTION("deterministic always u") {
        auto d = DegreeDistribution::deterministic(3);
        for (int i = 0; i < 100; ++i) CHECK(sample_degree(d, rng) == 3);
    }
    SECTION("explicit point mass at zero") {
        auto d = DegreeDistribution::explicit_pmf({{0, 1.0}});
        for (int i = 0; i < 100; ++i) CHECK(sample_degree(d, rng) == 0);
    }
    SECTION("half-half mean") {
        auto d = DegreeDistribution::explicit_pmf({{1, 0.5}, {2, 0.5}});
        double total = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) total += sample_degree(d, rng);
        CHECK(total / n > 1.49);
        CHECK(total / n < 1.51);
    }
}

TEST_CASE("max_support reports the top of the support") {
    CHECK(max_support(DegreeDistribution::deterministic(3)) == std::optional<std::uint32_t>{3});
    CHECK(max_support(DegreeDistribution::explicit_pmf({{1, 0.5}, {2, 0.5}})) ==
          std::optional<std::uint32_t>{2});
    CHECK_FALSE(max_support(DegreeDistribution::zipf(3.0)).has_value());
    CHECK(max_support(DegreeDistribution::zipf(3.0, 100)) == std::optional<std::uint32_t>{100});
}

TEST_CASE("invalid distribution parameters are rejected") {
    CHECK_THROWS_AS(DegreeDistribution::geometric(1.0), invalid_parameter);
    CHECK_THROWS_AS(DegreeDistribution::zipf(1.0), invalid_parameter);
    CHECK_THROWS_AS(DegreeDistribution::explicit_pmf({{1, 0.7}}), invalid_parameter);
    CHECK_THROWS_AS(DegreeDistribution::explicit_pmf({{1, -0.5}, {2, 1.5}}), invalid_parameter);
    CHECK_THROWS_AS(DegreeDistribution::deterministic(3).moment(0.0), invalid_parameter);
}

TEST_CASE("mark_points draws iid degrees per point") {
    Rng rng(55);
    SECTION("empty point set") {
        PointSet empty;
        auto marked = mark_points(empty, DegreeDistribution::deterministic(2), rng);
        CHECK(marked.degrees.empty());
    }
    SECTION("deterministic marks") {
        auto pts = testutil::points_1d({0.1, 0.2, 0.3, 0.4, 0.5});
        auto marked = mark_points(pts, DegreeDistribution::deterministic(2), rng);
        CHECK(marked.degrees == std::vector<std::uint32_t>{2, 2, 2, 2, 2});
    }
    SECTION("zipf histogram passes goodness of fit at 0.01") {
        auto d = DegreeDistribution::zipf(3.0);
        SimDomain dom(1, 100000.0);
        Rng r2(808);
        const PointSet pts = sample_poisson(dom, 1.0, r2);
        auto marked = mark_points(pts, d, r2);
        const std::size_t top = 60;
        std::vector<double> observed(top + 1, 0.0);
        for (auto deg : marked.degrees) observed[std::min<std::size_t>(deg, top)] += 1.0;
        std::vector<double> expected(top + 1, 0.0);
        for (std::size_t i = 0; i < top; ++i)
            expected[i] = static_cast<double>(marked.size()) * d.pmf(i);
        expected[top] = static_cast<double>(marked.size()) * d.tail_prob(top);
        CHECK(testutil::chi_square_gof(observed, expected) > 0.01);
    }
    SECTION("marking commutes with point order in distribution") {
        // same seed, permuted points: the sorted degree multiset is identical
        auto pts = testutil::points_1d({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
        PointSet permuted;
        for (std::size_t i = pts.size(); i-- > 0;) permuted.coords.push_back(pts.coords[i]);
        auto d = DegreeDistribution::geometric(0.5);
        Rng ra(9), rb(9);
        auto ma = mark_points(pts, d, ra);
        auto mb = mark_points(permuted, d, rb);
        std::sort(ma.degrees.begin(), ma.degrees.end());
        std::sort(mb.degrees.begin(), mb.degrees.end());
        CHECK(ma.degrees == mb.degrees);
    }
}
