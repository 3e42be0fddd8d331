#include <catch2/catch_amalgamated.hpp>

#include "stubmatch/geometry.hpp"
#include "stubmatch/grid.hpp"
#include "support/test_util.hpp"

using namespace stubmatch;
using testutil::points_1d;

TEST_CASE("torus distance wraps per coordinate") {
    SimDomain d1(1, 10.0);
    CHECK(d1.distance(make_position(1.0), make_position(9.0)) == Catch::Approx(2.0));
    SimDomain d2(2, 10.0);
    CHECK(d2.distance(make_position(0.0, 0.0), make_position(9.0, 9.0)) ==
          Catch::Approx(std::sqrt(2.0)));
    const Position x = make_position(3.3, 7.7);
    CHECK(d2.distance(x, x) == 0.0);
}

TEST_CASE("euclidean window distance does not wrap") {
    SimDomain d(1, 10.0, Boundary::euclidean_window);
    CHECK(d.distance(make_position(1.0), make_position(9.0)) == Catch::Approx(8.0));
}

TEST_CASE("torus metric satisfies symmetry and triangle inequality") {
    Rng rng(2024);
    for (int dim = 1; dim <= 3; ++dim) {
        SimDomain dom(dim, 7.0);
        for (int trial = 0; trial < 200; ++trial) {
            Position a{0, 0, 0}, b{0, 0, 0}, c{0, 0, 0};
            for (int k = 0; k < dim; ++k) {
                a[k] = rng.uniform(0.0, dom.side);
                b[k] = rng.uniform(0.0, dom.side);
                c[k] = rng.uniform(0.0, dom.side);
            }
            const double ab = dom.distance(a, b);
            CHECK(ab == dom.distance(b, a));
            CHECK(ab <= dom.distance(a, c) + dom.distance(c, b) + 1e-12);
        }
    }
}

TEST_CASE("invalid domains and intensities are rejected") {
    CHECK_THROWS_AS(SimDomain(1, 0.0), invalid_parameter);
    CHECK_THROWS_AS(SimDomain(4, 1.0), invalid_parameter);
    SimDomain dom(1, 5.0);
    Rng rng(1);
    CHECK_THROWS_AS(sample_poisson(dom, 0.0, rng), invalid_parameter);
    CHECK_THROWS_AS(sample_poisson(dom, -1.0, rng), invalid_parameter);
}

TEST_CASE("poisson sampling has the right mean") {
    Rng rng(11);
    SECTION("d=2, L=10, intensity 1: mean near 100") {
        SimDomain dom(2, 10.0);
        double total = 0.0;
        const int reps = 10000;
        for (int r = 0; r < reps; ++r) total += sample_poisson(dom, 1.0, rng).size();
        const double mean = total / reps;
        CHECK(mean > 98.0);
        CHECK(mean < 102.0);
    }
    SECTION("d=1, L=5, intensity 2: mean near 10") {
        SimDomain dom(1, 5.0);
        double total = 0.0;
        const int reps = 20000;
        for (int r = 0; r < reps; ++r) total += sample_poisson(dom, 2.0, rng).size();
        CHECK(total / reps == Catch::Approx(10.0).margin(0.15));
    }
}

TEST_CASE("poisson counts pass a chi-square goodness of fit at 0.01") {
    SimDomain dom(2, 10.0);
    Rng rng(4242);
    const double mean = 100.0;
    const int reps = 10000;
    const std::size_t top = 200;
    std::vector<double> observed(top + 1, 0.0);
    for (int r = 0; r < reps; ++r) {
        const std::size_t n = std::min(sample_poisson(dom, 1.0, rng).size(), top);
        observed[n] += 1.0;
    }
    std::vector<double> expected(top + 1, 0.0);
    double cum = 0.0;
    for (std::size_t k = 0; k < top; ++k) {
        expected[k] = reps * testutil::poisson_pmf(mean, k);
        cum += expected[k];
    }
    expected[top] = reps - cum;  // lumped tail
    CHECK(testutil::chi_square_gof(observed, expected) > 0.01);
}

TEST_CASE("sampling is determined by the seed") {
    SimDomain dom(3, 4.0);
    Rng a(99), b(99);
    const PointSet pa = sample_poisson(dom, 1.5, a);
    const PointSet pb = sample_poisson(dom, 1.5, b);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa.coords[i] == pb.coords[i]);
}

TEST_CASE("count_in_ball counts points within r") {
    SimDomain dom(1, 10.0);
    const PointSet pts = points_1d({0.5, 2.0, 9.0});
    CHECK(count_in_ball(dom, pts, make_position(0.0), 1.2) == 2);
    CHECK(count_in_ball(dom, pts, make_position(0.1), 0.0) == 0);
    CHECK(count_in_ball(dom, pts, make_position(0.0), 5.0) == 3);
}

TEST_CASE("kth_nearest_distance returns sorted distances") {
    SimDomain dom(1, 10.0);
    const PointSet pts = points_1d({0.5, 2.0, 9.0});
    const Position c = make_position(0.0);
    CHECK(kth_nearest_distance(dom, pts, c, 1) == Catch::Approx(0.5));
    CHECK(kth_nearest_distance(dom, pts, c, 2) == Catch::Approx(1.0));
    CHECK(kth_nearest_distance(dom, pts, c, 3) == Catch::Approx(2.0));
    CHECK_THROWS_AS(kth_nearest_distance(dom, pts, c, 4), insufficient_points);
}

TEST_CASE("nearest-point radius mean matches the closed form at d=2") {
    // E[R_1] = 0.5 for a rate-1 process in the plane
    SimDomain dom(2, 8.0);
    Rng rng(31337);
    const int trials = 20000;
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
        const PointSet pts = sample_poisson(dom, 1.0, rng);
        total += kth_nearest_distance(dom, pts, make_position(0.0, 0.0), 1);
    }
    CHECK(total / trials == Catch::Approx(0.5).epsilon(0.02));
}

TEST_CASE("ball count at the k-th radius is at least k") {
    SimDomain dom(2, 6.0);
    Rng rng(5);
    const PointSet pts = sample_poisson(dom, 2.0, rng);
    for (int t = 0; t < 50; ++t) {
        Position c = make_position(rng.uniform(0.0, 6.0), rng.uniform(0.0, 6.0));
        for (std::size_t k = 1; k <= 5; ++k) {
            const double r = kth_nearest_distance(dom, pts, c, k);
            CHECK(count_in_ball(dom, pts, c, r) >= k);
        }
    }
}

TEST_CASE("neighbors_sorted yields eligible indices by distance") {
    SimDomain dom(1, 100.0, Boundary::euclidean_window);
    const PointSet pts = points_1d({0.0, 1.0, 3.0, 7.0});
    SECTION("all eligible") {
        auto seq = neighbors_sorted(dom, pts, 2, testutil::all_mask(4));
        CHECK(seq.drain() == std::vector<std::uint32_t>{1, 0, 3});
    }
    SECTION("single eligible point") {
        std::vector<std::uint8_t> mask{0, 0, 0, 1};
        auto seq = neighbors_sorted(dom, pts, 0, mask);
        CHECK(seq.next() == std::optional<std::uint32_t>{3});
        CHECK_FALSE(seq.next().has_value());
    }
    SECTION("mask all false") {
        auto seq = neighbors_sorted(dom, pts, 1, testutil::all_mask(4, false));
        CHECK(seq.drain().empty());
    }
    SECTION("mask length must match") {
        CHECK_THROWS_AS(neighbors_sorted(dom, pts, 0, testutil::all_mask(3)), invalid_parameter);
    }
}

TEST_CASE("grid queries agree with brute force") {
    Rng rng(777);
    for (int dim = 1; dim <= 3; ++dim) {
        for (int trial = 0; trial < 20; ++trial) {
            const double side = 5.0 + rng.uniform01() * 10.0;
            const Boundary b = trial % 2 ? Boundary::torus : Boundary::euclidean_window;
            SimDomain dom(dim, side, b);
            const PointSet pts = sample_poisson(dom, 2.0, rng);
            if (pts.size() < 2) continue;
            GridIndex grid(dom, pts);
            auto all = [](std::uint32_t) { return true; };
            for (int q = 0; q < 10; ++q) {
                Position c{0, 0, 0};
                for (int k = 0; k < dim; ++k) c[k] = rng.uniform(0.0, side);
                const std::size_t kk = 1 + rng.uniform_int(std::min<std::size_t>(8, pts.size()));
                auto got = grid.k_nearest(c, kk, std::nullopt, all);
                auto want = testutil::knn_brute(dom, pts, c, kk, std::nullopt);
                REQUIRE(got.size() == want.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CHECK(got[i].second == want[i].second);
                    CHECK(got[i].first == Catch::Approx(want[i].first));
                }
                auto nn = grid.nearest(c, std::nullopt, all);
                REQUIRE(nn.has_value());
                CHECK(nn->second == want[0].second);
            }
        }
    }
}

TEST_CASE("grid stream yields every point in order") {
    Rng rng(888);
    SimDomain dom(2, 9.0);
    const PointSet pts = sample_poisson(dom, 1.5, rng);
    GridIndex grid(dom, pts);
    const Position c = make_position(4.0, 4.0);
    auto st = grid.stream(c, std::nullopt);
    auto all = [](std::uint32_t) { return true; };
    auto want = testutil::knn_brute(dom, pts, c, pts.size(), std::nullopt);
    for (const auto& w : want) {
        auto got = st.next(all);
        REQUIRE(got.has_value());
        CHECK(got->second == w.second);
    }
    CHECK_FALSE(st.next(all).has_value());
}
