#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "stubmatch/matching.hpp"
#include "support/test_util.hpp"

using namespace stubmatch;
using testutil::all_mask;
using testutil::points_1d;

namespace {

PointSet random_points(const SimDomain& dom, std::size_t n, Rng& rng) {
    PointSet pts;
    for (std::size_t i = 0; i < n; ++i) {
        Position p{0, 0, 0};
        for (int k = 0; k < dom.dim; ++k) p[k] = rng.uniform(0.0, dom.side);
        pts.coords.push_back(p);
    }
    return pts;
}

}  // namespace

TEST_CASE("mutual nearest pairs on a line") {
    SimDomain dom(1, 1000.0, Boundary::euclidean_window);
    const PointSet pts = points_1d({0.0, 1.0, 3.0, 7.0});
    SECTION("hand-traced instance") {
        // 3's nearest is 1 but 1's nearest is 0; 7's nearest is 3 but 3's is 1
        auto pairs = mutual_nearest_pairs(dom, pts, all_mask(4));
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0] == std::pair<std::uint32_t, std::uint32_t>{0, 1});
    }
    SECTION("two eligible points pair up") {
        std::vector<std::uint8_t> mask{0, 1, 0, 1};
        auto pairs = mutual_nearest_pairs(dom, pts, mask);
        REQUIRE(pairs.size() == 1);
        CHECK(pairs[0] == std::pair<std::uint32_t, std::uint32_t>{1, 3});
    }
    SECTION("one eligible point gives nothing") {
        std::vector<std::uint8_t> mask{0, 0, 1, 0};
        CHECK(mutual_nearest_pairs(dom, pts, mask).empty());
    }
}

TEST_CASE("stable matching on small instances") {
    SimDomain dom(1, 1000.0, Boundary::euclidean_window);
    SECTION("line 0,1,3,7") {
        const PointSet pts = points_1d({0.0, 1.0, 3.0, 7.0});
        auto m = stable_match(dom, pts, all_mask(4));
        CHECK(m.partner[0] == 1);
        CHECK(m.partner[1] == 0);
        CHECK(m.partner[2] == 3);
        CHECK(m.partner[3] == 2);
        CHECK_FALSE(find_blocking_pair(dom, pts, m).has_value());
    }
    SECTION("two points") {
        const PointSet pts = points_1d({2.0, 5.0});
        auto m = stable_match(dom, pts, all_mask(2));
        CHECK(m.partner[0] == 1);
    }
    SECTION("odd count leaves the far point out") {
        const PointSet pts = points_1d({0.0, 1.0, 5.0});
        auto m = stable_match(dom, pts, all_mask(3));
        CHECK(m.partner[0] == 1);
        CHECK(m.partner[1] == 0);
        CHECK(m.partner[2] == -1);
    }
    SECTION("empty and singleton masks") {
        const PointSet pts = points_1d({0.0, 1.0});
        auto m0 = stable_match(dom, pts, all_mask(2, false));
        CHECK(m0.partner == std::vector<std::int64_t>{-1, -1});
        std::vector<std::uint8_t> one{1, 0};
        auto m1 = stable_match(dom, pts, one);
        CHECK(m1.partner == std::vector<std::int64_t>{-1, -1});
    }
}

TEST_CASE("blocking pair oracle") {
    SimDomain dom(1, 1000.0, Boundary::euclidean_window);
    const PointSet pts = points_1d({0.0, 1.0, 3.0, 7.0});
    SECTION("stable output has no blocking pair") {
        auto m = stable_match(dom, pts, all_mask(4));
        CHECK_FALSE(find_blocking_pair(dom, pts, m).has_value());
    }
    SECTION("crossed matching is blocked by (0,1)") {
        Matching m;
        m.mask = all_mask(4);
        m.partner = {2, 3, 0, 1};  // positions 0-3 and 1-7: distances 3 and 6
        auto bp = find_blocking_pair(dom, pts, m);
        REQUIRE(bp.has_value());
        CHECK(*bp == std::pair<std::uint32_t, std::uint32_t>{0, 1});
    }
    SECTION("single matched pair is stable") {
        const PointSet two = points_1d({1.0, 4.0});
        auto m = stable_match(dom, two, all_mask(2));
        CHECK_FALSE(find_blocking_pair(dom, two, m).has_value());
    }
}

TEST_CASE("stable matching properties on random instances") {
    Rng rng(90210);
    int checked = 0;
    for (int trial = 0; trial < 250; ++trial) {
        const int dim = 1 + static_cast<int>(rng.uniform_int(2));
        const Boundary b = rng.uniform_int(2) ? Boundary::torus : Boundary::euclidean_window;
        SimDomain dom(dim, 10.0, b);
        const std::size_t n = 2 + rng.uniform_int(11);
        const PointSet pts = random_points(dom, n, rng);
        auto mask = all_mask(n);
        auto m = stable_match(dom, pts, mask);
        CHECK_FALSE(find_blocking_pair(dom, pts, m).has_value());

        // partner symmetry, no self-pairing, at most one unmatched
        std::size_t unmatched = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (m.partner[i] < 0) {
                ++unmatched;
                continue;
            }
            CHECK(m.partner[i] != static_cast<std::int64_t>(i));
            CHECK(m.partner[m.partner[i]] == static_cast<std::int64_t>(i));
        }
        CHECK(unmatched == n % 2);

        // round-1 mutual pairs are contained in the matching
        for (auto [a, bq] : mutual_nearest_pairs(dom, pts, mask))
            CHECK(m.partner[a] == static_cast<std::int64_t>(bq));

        // idempotence: restricted to matched points, the matching re-derives
        std::vector<std::uint8_t> matched_mask(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            if (m.partner[i] >= 0) matched_mask[i] = 1;
        auto m2 = stable_match(dom, pts, matched_mask);
        for (std::size_t i = 0; i < n; ++i)
            if (matched_mask[i]) CHECK(m2.partner[i] == m.partner[i]);
        ++checked;
    }
    CHECK(checked == 250);
}

TEST_CASE("stable matching is shift-equivariant on the torus") {
    Rng rng(606);
    SimDomain dom(2, 12.0);
    const PointSet pts = random_points(dom, 40, rng);
    auto m = stable_match(dom, pts, all_mask(40));
    const Position shift = make_position(4.25, 9.5);
    PointSet shifted;
    for (const auto& p : pts.coords)
        shifted.coords.push_back(
            make_position(dom.wrap(p[0] + shift[0]), dom.wrap(p[1] + shift[1])));
    auto ms = stable_match(dom, shifted, all_mask(40));
    CHECK(m.partner == ms.partner);
}

TEST_CASE("stable matching agrees with the oracle on a larger instance") {
    Rng rng(1234);
    SimDomain dom(2, 30.0);
    const PointSet pts = sample_poisson(dom, 1.0, rng);
    auto m = stable_match(dom, pts, all_mask(pts.size()));
    CHECK_FALSE(find_blocking_pair(dom, pts, m).has_value());
}

TEST_CASE("constrained coloring is proper and covers choices") {
    Rng rng(17);
    SECTION("two items, one constraint, two colors: both proper colorings occur evenly") {
        ColoringConstraints cc{2, {{0, 1}}, 2};
        int first = 0;
        const int reps = 10000;
        for (int r = 0; r < reps; ++r) {
            auto col = sample_constrained_coloring(cc, rng);
            REQUIRE(col.size() == 2);
            REQUIRE(col[0] != col[1]);
            if (col[0] == 1) ++first;
        }
        CHECK(std::fabs(first / static_cast<double>(reps) - 0.5) < 0.02);
    }
    SECTION("one item, three colors: uniform") {
        ColoringConstraints cc{1, {}, 3};
        std::map<std::uint32_t, int> freq;
        const int reps = 9000;
        for (int r = 0; r < reps; ++r) ++freq[sample_constrained_coloring(cc, rng)[0]];
        for (std::uint32_t c = 1; c <= 3; ++c)
            CHECK(std::fabs(freq[c] / static_cast<double>(reps) - 1.0 / 3.0) < 0.03);
    }
    SECTION("path on three items with three colors: always proper, all 12 colorings occur") {
        ColoringConstraints cc{3, {{0, 1}, {1, 2}}, 3};
        // enumeration oracle: 3 choices for the middle, 2 for each neighbor
        std::set<std::vector<std::uint32_t>> seen;
        for (int r = 0; r < 5000; ++r) {
            auto col = sample_constrained_coloring(cc, rng);
            REQUIRE(col[0] != col[1]);
            REQUIRE(col[1] != col[2]);
            seen.insert(col);
        }
        CHECK(seen.size() == 12);
    }
    SECTION("degree k is rejected") {
        ColoringConstraints cc{3, {{0, 1}, {0, 2}}, 2};
        CHECK_THROWS_AS(sample_constrained_coloring(cc, rng), precondition_violation);
    }
}
