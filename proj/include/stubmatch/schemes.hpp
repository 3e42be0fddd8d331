#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stubmatch/degrees.hpp"
#include "stubmatch/matching.hpp"

namespace stubmatch {

enum class Stage : std::uint8_t { stable, sam, claim };

inline const char* stage_name(Stage s) {
    switch (s) {
        case Stage::stable: return "stable";
        case Stage::sam: return "sam";
        default: return "claim";
    }
}

struct PairedEdge {
    std::uint32_t a, b;   // a < b
    std::uint32_t level;  // stub level within its stage; 0 for claim edges
    Stage stage;
};

struct UnpairedStub {
    std::uint32_t point;
    std::uint32_t level;
};

// Edge list produced by a pairing scheme plus the ledger of stubs that could
// not be paired at finite volume.
struct Pairing {
    std::vector<PairedEdge> edges;
    std::vector<UnpairedStub> unpaired;
};

inline std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
}

// mask[i - 1][x] is true iff degree(x) >= i; masks are nested.
inline std::vector<std::vector<std::uint8_t>> level_sets(const MarkedPointSet& marked) {
    const std::uint32_t dmax = marked.max_degree();
    std::vector<std::vector<std::uint8_t>> out(dmax);
    for (std::uint32_t i = 1; i <= dmax; ++i) {
        out[i - 1].assign(marked.size(), 0);
        for (std::size_t x = 0; x < marked.size(); ++x)
            if (marked.degrees[x] >= i) out[i - 1][x] = 1;
    }
    return out;
}

namespace detail {

// members[i - 1]: indices with value >= i, each list sorted by the original
// sequence order of `ids`.
inline std::vector<std::vector<std::uint32_t>> level_member_lists(
    const std::vector<std::uint32_t>& ids, const std::vector<std::uint32_t>& values,
    std::uint32_t vmax) {
    std::vector<std::vector<std::uint32_t>> by_value(vmax + 1);
    for (auto id : ids) {
        const std::uint32_t v = std::min(values[id], vmax);
        if (v >= 1) by_value[v].push_back(id);
    }
    std::vector<std::vector<std::uint32_t>> levels(vmax);
    if (vmax == 0) return levels;
    levels[vmax - 1] = std::move(by_value[vmax]);
    for (std::uint32_t i = vmax - 1; i >= 1; --i) {
        const auto& upper = levels[i];  // level i+1 members
        std::vector<std::uint32_t> merged;
        merged.reserve(upper.size() + by_value[i].size());
        // both inputs are subsequences of `ids`, so rank order is positional
        std::merge(upper.begin(), upper.end(), by_value[i].begin(), by_value[i].end(),
                   std::back_inserter(merged));
        levels[i - 1] = std::move(merged);
    }
    return levels;
}

}  // namespace detail

// Repeated stable matching with coloring. Level 1 stable-matches every point
// with at least one stub. At level i the points with degree >= i receive a
// proper i-coloring in which previously matched pairs get different colors;
// each color class is stable-matched separately and the level-i stubs are
// paired accordingly. The coloring prevents duplicate vertex pairs.
inline Pairing rsmc(const SimDomain& domain, const MarkedPointSet& marked, Rng& rng) {
    Pairing out;
    const std::size_t n = marked.size();
    if (n == 0) return out;
    const std::uint32_t dmax = marked.max_degree();
    if (dmax == 0) return out;

    std::vector<std::uint32_t> ids(n);
    for (std::uint32_t i = 0; i < n; ++i) ids[i] = i;
    auto levels = detail::level_member_lists(ids, marked.degrees, dmax);

    std::vector<std::vector<std::uint32_t>> matched_adj(n);
    for (std::uint32_t lvl = 1; lvl <= dmax; ++lvl) {
        const auto& members = levels[lvl - 1];
        if (members.empty()) continue;
        std::vector<std::vector<std::uint32_t>> classes;
        if (lvl == 1) {
            classes.push_back(members);
        } else {
            ColoringConstraints cc;
            cc.item_count = static_cast<std::uint32_t>(members.size());
            cc.color_count = lvl;
            for (std::uint32_t local = 0; local < members.size(); ++local) {
                const std::uint32_t g = members[local];
                for (auto h : matched_adj[g]) {
                    if (marked.degrees[h] < lvl) continue;
                    if (g < h) {
                        const auto it = std::lower_bound(members.begin(), members.end(), h);
                        cc.different.emplace_back(local,
                                                  static_cast<std::uint32_t>(it - members.begin()));
                    }
                }
            }
            const auto colors = sample_constrained_coloring(cc, rng);
            classes.assign(lvl, {});
            for (std::uint32_t local = 0; local < members.size(); ++local)
                classes[colors[local] - 1].push_back(members[local]);
        }
        for (const auto& cls : classes) {
            auto res = stable_match_on(domain, marked.points, cls);
            for (auto [a, b] : res.pairs) {
                out.edges.push_back(PairedEdge{a, b, lvl, Stage::stable});
                matched_adj[a].push_back(b);
                matched_adj[b].push_back(a);
            }
            for (auto u : res.unmatched) out.unpaired.push_back(UnpairedStub{u, lvl});
        }
    }
    return out;
}

namespace detail {

struct SiteLevelOut {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // site pairs
    std::vector<std::uint32_t> unpaired_sites;
};

// One SAM level on a cyclically ordered member list. Adjacent pairs form the
// level matching; the first site of each pair is right-oriented, the second
// left-oriented, and the level-i stub of a right-oriented site pairs with the
// i-th left-oriented site to its right. A shift larger than the number of
// left-oriented sites would lap the torus, so those stubs stay unpaired.
//
// For an even member count, `choice` in {0, 1} picks one of the two
// alternating matchings, offset from `anchor_pos`; for an odd count, `choice`
// in [0, size) picks the site that sits out, again relative to the anchor.
inline SiteLevelOut sam_level_pairs(const std::vector<std::uint32_t>& members_cyc,
                                    std::size_t anchor_pos, std::uint32_t level,
                                    std::uint64_t choice) {
    SiteLevelOut out;
    const std::size_t n = members_cyc.size();
    if (n == 0) return out;
    if (n == 1) {
        out.unpaired_sites.push_back(members_cyc[0]);
        return out;
    }
    std::vector<std::uint32_t> w;
    if (n % 2 == 1) {
        const std::size_t sit_out = (anchor_pos + choice) % n;
        out.unpaired_sites.push_back(members_cyc[sit_out]);
        w.reserve(n - 1);
        for (std::size_t s = 1; s < n; ++s) w.push_back(members_cyc[(sit_out + s) % n]);
    } else {
        const std::size_t start = (anchor_pos + choice % 2) % n;
        w.reserve(n);
        for (std::size_t s = 0; s < n; ++s) w.push_back(members_cyc[(start + s) % n]);
    }
    const std::size_t m = w.size() / 2;
    if (level > m) {
        for (auto s : w) out.unpaired_sites.push_back(s);
        return out;
    }
    for (std::size_t j = 0; j < m; ++j) {
        const std::uint32_t x = w[2 * j];
        const std::uint32_t y = w[2 * ((j + level - 1) % m) + 1];
        out.edges.emplace_back(x, y);
    }
    return out;
}

struct SitePairing {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> edges;  // a, b, level
    std::vector<std::pair<std::uint32_t, std::uint32_t>> unpaired;               // site, level
};

// Shifted adjacent matching over sites on a circle of given period. `pos` are
// the 1-d positions, `degrees` the per-site stub counts, `rank_id` a
// shift-invariant identity used for sort tie-breaks, the cyclic anchor and the
// duplicate guard ordering. One random choice is drawn per level.
inline SitePairing sam_on_sites(const std::vector<double>& pos,
                                const std::vector<std::uint32_t>& degrees,
                                const std::vector<std::uint32_t>& rank_id, Rng& rng) {
    SitePairing out;
    const std::size_t n = pos.size();
    if (n == 0) return out;
    std::uint32_t dmax = 0;
    for (auto d : degrees) dmax = std::max(dmax, d);
    if (dmax == 0) return out;

    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (pos[a] != pos[b]) return pos[a] < pos[b];
        return rank_id[a] < rank_id[b];
    });
    auto levels = detail::level_member_lists(order, degrees, dmax);

    std::unordered_set<std::uint64_t> seen;
    for (std::uint32_t lvl = 1; lvl <= dmax; ++lvl) {
        const auto& members = levels[lvl - 1];
        if (members.empty()) continue;
        if (members.size() == 1) {
            out.unpaired.emplace_back(members[0], lvl);
            continue;
        }
        std::size_t anchor_pos = 0;
        for (std::size_t s = 1; s < members.size(); ++s)
            if (rank_id[members[s]] < rank_id[members[anchor_pos]]) anchor_pos = s;
        const std::uint64_t choice = (members.size() % 2 == 1)
                                         ? rng.uniform_int(members.size())
                                         : rng.uniform_int(2);
        auto level_out = sam_level_pairs(members, anchor_pos, lvl, choice);
        for (auto s : level_out.unpaired_sites) out.unpaired.emplace_back(s, lvl);
        for (auto [x, y] : level_out.edges) {
            // a full-lap coincidence can repeat a pair at finite volume; skip
            // the edge and leave both stubs unpaired instead
            if (!seen.insert(pair_key(x, y)).second) {
                out.unpaired.emplace_back(x, lvl);
                out.unpaired.emplace_back(y, lvl);
            } else {
                out.edges.emplace_back(std::min(x, y), std::max(x, y), lvl);
            }
        }
    }
    return out;
}

}  // namespace detail

// Shifted adjacent matching on the points themselves (dimension 1 only).
inline Pairing sam(const SimDomain& domain, const MarkedPointSet& marked, Rng& rng) {
    if (domain.dim != 1)
        throw invalid_dimension("sam: requires a one-dimensional domain");
    Pairing out;
    const std::size_t n = marked.size();
    if (n == 0) return out;
    std::vector<double> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = marked.points.coords[i][0];
    std::vector<std::uint32_t> ranks(n);
    for (std::uint32_t i = 0; i < n; ++i) ranks[i] = i;
    auto sp = detail::sam_on_sites(pos, marked.degrees, ranks, rng);
    for (auto [a, b, lvl] : sp.edges) out.edges.push_back(PairedEdge{a, b, lvl, Stage::sam});
    for (auto [s, lvl] : sp.unpaired) out.unpaired.push_back(UnpairedStub{s, lvl});
    return out;
}

// The unit-cube lattice overlay: a uniformly shifted copy of the integer
// lattice, each point associated with the cube containing it, cube positions
// jittered to break exact distance ties, and each cube's stubs numbered by
// cycling through its randomly ordered points.
struct LatticeOverlay {
    std::array<double, 3> x0{0.0, 0.0, 0.0};
    int cells_per_axis = 0;
    std::uint32_t m = 0;

    struct Cube {
        std::array<int, 3> coord{0, 0, 0};
        Position lattice_pos{0.0, 0.0, 0.0};
        Position jittered{0.0, 0.0, 0.0};
        std::uint32_t agg_degree = 0;
        bool high = false;
        std::uint32_t anchor = 0;                                     // smallest contained point index
        std::vector<std::pair<std::uint32_t, std::uint32_t>> stubs;   // (point, stub number, 1-based)
        std::uint32_t consumed = 0;                                   // prefix used by claiming
        bool donated = false;                                         // low cube already connected
    };

    std::vector<Cube> cubes;  // non-empty cubes, ordered by anchor
    std::vector<std::uint32_t> cube_of_point;
    std::unordered_map<std::uint64_t, std::uint32_t> index_by_coord;

    std::uint32_t remaining(std::size_t c) const {
        return static_cast<std::uint32_t>(cubes[c].stubs.size()) - cubes[c].consumed;
    }

    std::uint64_t coord_key(int cx, int cy, int cz) const {
        const std::uint64_t n = static_cast<std::uint64_t>(cells_per_axis);
        return (static_cast<std::uint64_t>(cz) * n + static_cast<std::uint64_t>(cy)) * n +
               static_cast<std::uint64_t>(cx);
    }

    const Cube* cube_at(int cx, int cy = 0, int cz = 0) const {
        auto it = index_by_coord.find(coord_key(cx, cy, cz));
        return it == index_by_coord.end() ? nullptr : &cubes[it->second];
    }

    std::uint32_t agg_degree_at(int cx, int cy = 0, int cz = 0) const {
        const Cube* c = cube_at(cx, cy, cz);
        return c ? c->agg_degree : 0;
    }

    bool high_at(int cx, int cy = 0, int cz = 0) const {
        const Cube* c = cube_at(cx, cy, cz);
        return c && c->high;
    }
};

namespace detail {

// Overlay construction with the lattice origin supplied, for reproducible
// fixtures; the public op draws the origin uniformly in [0,1)^d.
inline LatticeOverlay overlay_with_origin(const SimDomain& domain, const MarkedPointSet& marked,
                                          std::uint32_t m, const std::array<double, 3>& x0,
                                          Rng& rng) {
    const double side = domain.side;
    const double cells_real = std::round(side);
    if (std::fabs(side - cells_real) > 1e-9 || cells_real < 1.0)
        throw invalid_parameter("overlay_lattice: box side must be a positive integer");
    if (m < 1) throw invalid_parameter("overlay_lattice: m must be at least 1");
    const int cells = static_cast<int>(cells_real);

    LatticeOverlay ov;
    ov.x0 = x0;
    ov.cells_per_axis = cells;
    ov.m = m;
    ov.cube_of_point.assign(marked.size(), 0);

    // cube containing x: per axis, the unit interval centered at x0 + z
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> points_by_cube;
    for (std::uint32_t p = 0; p < marked.size(); ++p) {
        int c[3] = {0, 0, 0};
        for (int k = 0; k < domain.dim; ++k) {
            int z = static_cast<int>(std::floor(marked.points.coords[p][k] - x0[k] + 0.5));
            z %= cells;
            if (z < 0) z += cells;
            c[k] = z;
        }
        points_by_cube[ov.coord_key(c[0], c[1], c[2])].push_back(p);
    }

    ov.cubes.reserve(points_by_cube.size());
    for (auto& [key, plist] : points_by_cube) {
        LatticeOverlay::Cube cube;
        std::uint64_t rest = key;
        cube.coord[0] = static_cast<int>(rest % cells);
        rest /= cells;
        cube.coord[1] = static_cast<int>(rest % cells);
        rest /= cells;
        cube.coord[2] = static_cast<int>(rest);
        for (int k = 0; k < domain.dim; ++k)
            cube.lattice_pos[k] = domain.wrap(x0[k] + cube.coord[k]);
        cube.anchor = plist.front();  // plist ascending by construction
        for (auto p : plist) cube.agg_degree += marked.degrees[p];
        cube.high = cube.agg_degree > m;
        cube.stubs.reserve(cube.agg_degree);
        ov.cubes.push_back(std::move(cube));
        ov.cubes.back().jittered = ov.cubes.back().lattice_pos;
        // temporarily stash the point list index via index_by_coord below
    }
    std::sort(ov.cubes.begin(), ov.cubes.end(),
              [](const auto& a, const auto& b) { return a.anchor < b.anchor; });
    for (std::uint32_t c = 0; c < ov.cubes.size(); ++c)
        ov.index_by_coord[ov.coord_key(ov.cubes[c].coord[0], ov.cubes[c].coord[1],
                                       ov.cubes[c].coord[2])] = c;

    // per-cube randomness in anchor order: point shuffle, then jitter
    for (std::uint32_t c = 0; c < ov.cubes.size(); ++c) {
        auto& cube = ov.cubes[c];
        auto plist = points_by_cube[ov.coord_key(cube.coord[0], cube.coord[1], cube.coord[2])];
        for (auto p : plist) ov.cube_of_point[p] = c;
        rng.shuffle(plist);
        std::vector<std::uint32_t> next_stub(plist.size(), 1);
        std::size_t numbered = 0;
        while (numbered < cube.agg_degree) {
            for (std::size_t s = 0; s < plist.size(); ++s) {
                const std::uint32_t p = plist[s];
                if (next_stub[s] <= marked.degrees[p]) {
                    cube.stubs.emplace_back(p, next_stub[s]++);
                    ++numbered;
                }
            }
        }
        const int axis = static_cast<int>(rng.uniform_int(domain.dim));
        const double sign = rng.uniform_int(2) == 0 ? 1.0 : -1.0;
        const double delta = rng.uniform(0.0, 0.1);
        cube.jittered = cube.lattice_pos;
        cube.jittered[axis] = domain.wrap(cube.jittered[axis] + sign * delta);
    }
    return ov;
}

}  // namespace detail

inline LatticeOverlay overlay_lattice(const SimDomain& domain, const MarkedPointSet& marked,
                                      std::uint32_t m, Rng& rng) {
    std::array<double, 3> x0{0.0, 0.0, 0.0};
    for (int k = 0; k < domain.dim; ++k) x0[k] = rng.uniform01();
    return detail::overlay_with_origin(domain, marked, m, x0, rng);
}

struct ClaimOutcome {
    std::vector<PairedEdge> edges;                                   // point-level claim edges
    std::vector<std::pair<std::uint32_t, std::uint32_t>> cube_edges; // (high cube, low cube)
    std::vector<UnpairedStub> leftover_high;                         // finite-box artifact, flagged
    std::uint32_t rounds = 0;
    bool lows_exhausted = false;
};

// Claiming rounds between high and low cubes: in every round each high cube
// with remaining stubs claims that many nearest claimable low cubes (low,
// holding at least one stub, never yet connected to any high cube); each
// claimed low connects to its nearest claimant and both sides consume one stub
// in numerical order. A low cube donates at most one stub ever. Distances are
// between jittered cube positions; ties break on (distance, cube order).
inline ClaimOutcome claiming_rounds(const SimDomain& domain, LatticeOverlay& ov,
                                    std::uint32_t m) {
    if (m != ov.m)
        throw precondition_violation("claiming_rounds: overlay was built with a different m");
    ClaimOutcome out;
    const std::size_t nc = ov.cubes.size();
    PointSet cube_pts;
    cube_pts.coords.reserve(nc);
    for (const auto& c : ov.cubes) cube_pts.coords.push_back(c.jittered);
    GridIndex grid(domain, cube_pts);

    std::size_t claimable_count = 0;
    for (std::size_t c = 0; c < nc; ++c)
        if (!ov.cubes[c].high && !ov.cubes[c].donated && ov.remaining(c) > 0) ++claimable_count;

    auto claimable = [&](std::uint32_t c) {
        return !ov.cubes[c].high && !ov.cubes[c].donated && ov.remaining(c) > 0;
    };

    std::vector<std::uint32_t> highs;
    for (std::uint32_t c = 0; c < nc; ++c)
        if (ov.cubes[c].high && ov.remaining(c) > 0) highs.push_back(c);

    std::vector<std::vector<std::pair<double, std::uint32_t>>> claims(nc);
    for (;;) {
        highs.erase(std::remove_if(highs.begin(), highs.end(),
                                   [&](std::uint32_t c) { return ov.remaining(c) == 0; }),
                    highs.end());
        if (highs.empty()) break;
        if (claimable_count == 0) {
            for (auto z : highs) {
                auto& cube = ov.cubes[z];
                while (cube.consumed < cube.stubs.size()) {
                    const auto [p, stub] = cube.stubs[cube.consumed++];
                    out.leftover_high.push_back(UnpairedStub{p, stub});
                }
            }
            out.lows_exhausted = true;
            break;
        }
        ++out.rounds;
        std::vector<std::uint32_t> touched;
        for (auto z : highs) {
            auto st = grid.stream(ov.cubes[z].jittered, z);
            std::uint32_t need = ov.remaining(z);
            while (need > 0) {
                auto nxt = st.next(claimable);
                if (!nxt) break;
                if (claims[nxt->second].empty()) touched.push_back(nxt->second);
                claims[nxt->second].emplace_back(nxt->first, z);
                --need;
            }
        }
        std::sort(touched.begin(), touched.end());
        std::vector<std::vector<std::pair<double, std::uint32_t>>> winners(nc);
        for (auto w : touched) {
            auto best = *std::min_element(claims[w].begin(), claims[w].end());
            winners[best.second].emplace_back(best.first, w);
            claims[w].clear();
        }
        for (auto z : highs) {
            if (winners[z].empty()) continue;
            std::sort(winners[z].begin(), winners[z].end());
            for (auto& [dist, w] : winners[z]) {
                (void)dist;
                auto& hz = ov.cubes[z];
                auto& lw = ov.cubes[w];
                const auto [hp, hs] = hz.stubs[hz.consumed++];
                const auto [lp, ls] = lw.stubs[0];
                (void)hs;
                (void)ls;
                lw.consumed = 1;
                lw.donated = true;
                --claimable_count;
                out.edges.push_back(
                    PairedEdge{std::min(hp, lp), std::max(hp, lp), 0, Stage::claim});
                out.cube_edges.emplace_back(z, w);
            }
        }
    }
    return out;
}

// Smallest m such that the total stub count of a unit cube (point count
// Poisson(intensity), degrees iid from F) exceeds m with probability at most
// 1e-3. Masses beyond the working cap are lumped conservatively into the tail.
inline std::uint32_t auto_truncation_m(const DegreeDistribution& F, double intensity = 1.0) {
    if (!(intensity > 0.0)) throw invalid_parameter("auto_truncation_m: intensity must be positive");
    constexpr std::size_t cap = 1024;
    constexpr double target = 1e-3;
    std::vector<long double> f(cap, 0.0L);
    for (std::size_t i = 0; i < cap; ++i) f[i] = F.pmf(i);
    std::vector<long double> dist(cap, 0.0L);
    dist[0] = 1.0L;
    std::vector<long double> acc(cap, 0.0L);
    long double pn = std::exp(static_cast<long double>(-intensity));
    long double used = pn;
    for (std::size_t s = 0; s < cap; ++s) acc[s] += pn * dist[s];
    std::vector<long double> next(cap, 0.0L);
    for (std::size_t nn = 1; 1.0L - used > 1e-12L; ++nn) {
        std::fill(next.begin(), next.end(), 0.0L);
        for (std::size_t j = 0; j < cap; ++j) {
            if (dist[j] == 0.0L) continue;
            const std::size_t lim = cap - j;
            for (std::size_t i = 0; i < lim; ++i)
                if (f[i] != 0.0L) next[j + i] += dist[j] * f[i];
        }
        dist.swap(next);
        pn *= static_cast<long double>(intensity) / static_cast<long double>(nn);
        used += pn;
        for (std::size_t s = 0; s < cap; ++s) acc[s] += pn * dist[s];
        if (nn > 10000) break;
    }
    long double cum = 0.0L;
    for (std::size_t mcand = 0; mcand + 2 < cap; ++mcand) {
        cum += acc[mcand];
        if (mcand >= 1 && 1.0L - cum <= target) return static_cast<std::uint32_t>(mcand);
    }
    throw invalid_parameter(
        "auto_truncation_m: no threshold below 1022; set truncation_m explicitly");
}

// Truncated scheme: lattice overlay, claiming rounds for the high cubes, then
// the leftover low-cube stubs are paired with SAM over the lattice sites in
// dimension 1 or returned to their points and paired with RSMC otherwise.
inline Pairing truncated_scheme(const SimDomain& domain, const MarkedPointSet& marked,
                                std::uint32_t m, Rng& rng) {
    Rng rng_overlay = rng.fork();
    Rng rng_residual = rng.fork();
    LatticeOverlay ov = overlay_lattice(domain, marked, m, rng_overlay);
    ClaimOutcome claim = claiming_rounds(domain, ov, m);

    Pairing out;
    out.edges = claim.edges;
    out.unpaired = claim.leftover_high;

    if (domain.dim == 1) {
        std::vector<double> pos;
        std::vector<std::uint32_t> degs, ranks, site_cube;
        for (std::uint32_t c = 0; c < ov.cubes.size(); ++c) {
            if (ov.cubes[c].high) continue;
            const std::uint32_t rem = ov.remaining(c);
            if (rem == 0) continue;
            pos.push_back(ov.cubes[c].lattice_pos[0]);
            degs.push_back(rem);
            ranks.push_back(ov.cubes[c].anchor);
            site_cube.push_back(c);
        }
        auto sp = detail::sam_on_sites(pos, degs, ranks, rng_residual);
        for (auto [sa, sb, lvl] : sp.edges) {
            const auto& ca = ov.cubes[site_cube[sa]];
            const auto& cb = ov.cubes[site_cube[sb]];
            const std::uint32_t pa = ca.stubs[ca.consumed + lvl - 1].first;
            const std::uint32_t pb = cb.stubs[cb.consumed + lvl - 1].first;
            out.edges.push_back(PairedEdge{std::min(pa, pb), std::max(pa, pb), lvl, Stage::sam});
        }
        for (auto [site, lvl] : sp.unpaired) {
            const auto& cu = ov.cubes[site_cube[site]];
            const auto [p, stub] = cu.stubs[cu.consumed + lvl - 1];
            out.unpaired.push_back(UnpairedStub{p, stub});
        }
    } else {
        std::vector<std::uint32_t> residual = marked.degrees;
        for (const auto& e : claim.edges) {
            --residual[e.a];
            --residual[e.b];
        }
        for (const auto& u : claim.leftover_high) --residual[u.point];
        MarkedPointSet res_marked;
        res_marked.points = marked.points;
        res_marked.degrees = residual;
        Pairing sub = rsmc(domain, res_marked, rng_residual);
        for (const auto& e : sub.edges) out.edges.push_back(e);
        for (const auto& u : sub.unpaired) {
            const std::uint32_t consumed = marked.degrees[u.point] - residual[u.point];
            out.unpaired.push_back(UnpairedStub{u.point, consumed + u.level});
        }
    }
    return out;
}

struct ValidationReport {
    std::uint64_t self_loop_count = 0;
    std::uint64_t duplicate_edge_count = 0;
    std::uint64_t degree_mismatch_count = 0;
    double unpaired_fraction = 0.0;
    std::uint64_t pointwise_lower_bound_violations = 0;

    bool ok() const {
        return self_loop_count == 0 && duplicate_edge_count == 0 &&
               degree_mismatch_count == 0 && pointwise_lower_bound_violations == 0;
    }
};

// Structural checks on a pairing: no self-loops, unordered pairs unique,
// per-point stub conservation, and the pointwise bound that a fully paired
// point's total incident edge length is at least the sum of the distances to
// its D nearest other points (its partners are D distinct other points).
inline ValidationReport validate_pairing(const SimDomain& domain, const MarkedPointSet& marked,
                                         const Pairing& pairing) {
    ValidationReport rep;
    const std::size_t n = marked.size();
    std::vector<std::uint32_t> incident(n, 0), unpaired(n, 0);
    std::vector<double> incident_len(n, 0.0);
    std::vector<std::uint64_t> keys;
    keys.reserve(pairing.edges.size());
    for (const auto& e : pairing.edges) {
        if (e.a == e.b) {
            ++rep.self_loop_count;
            continue;
        }
        keys.push_back(pair_key(e.a, e.b));
        const double len = domain.distance(marked.points.coords[e.a], marked.points.coords[e.b]);
        ++incident[e.a];
        ++incident[e.b];
        incident_len[e.a] += len;
        incident_len[e.b] += len;
    }
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 1; i < keys.size(); ++i)
        if (keys[i] == keys[i - 1]) ++rep.duplicate_edge_count;
    for (const auto& u : pairing.unpaired) ++unpaired[u.point];
    std::uint64_t total_stubs = 0;
    for (std::size_t p = 0; p < n; ++p) {
        total_stubs += marked.degrees[p];
        if (incident[p] + unpaired[p] != marked.degrees[p]) ++rep.degree_mismatch_count;
    }
    rep.unpaired_fraction =
        total_stubs == 0 ? 0.0
                         : static_cast<double>(pairing.unpaired.size()) / static_cast<double>(total_stubs);

    if (n >= 2) {
        GridIndex grid(domain, marked.points);
        auto all = [](std::uint32_t) { return true; };
        for (std::uint32_t p = 0; p < n; ++p) {
            const std::uint32_t d = marked.degrees[p];
            if (d == 0 || unpaired[p] != 0 || incident[p] != d) continue;
            if (d > n - 1) continue;  // cannot have d distinct partners; counted above
            auto nb = grid.k_nearest(marked.points.coords[p], d, p, all);
            double bound = 0.0;
            for (const auto& [dist, id] : nb) {
                (void)id;
                bound += dist;
            }
            if (incident_len[p] + 1e-9 * (1.0 + bound) < bound)
                ++rep.pointwise_lower_bound_violations;
        }
    }
    return rep;
}

}  // namespace stubmatch
