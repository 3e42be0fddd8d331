#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stubmatch/grid.hpp"

namespace stubmatch {

// Matching restricted to an eligibility mask: partner[i] is the matched point
// index or -1.
struct Matching {
    std::vector<std::int64_t> partner;
    std::vector<std::uint8_t> mask;
};

struct MatchResult {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (a, b) with a < b
    std::vector<std::uint32_t> unmatched;
};

// All pairs {x, y} where each is the other's nearest eligible point, under the
// (distance, index) order.
inline std::vector<std::pair<std::uint32_t, std::uint32_t>> mutual_nearest_pairs(
    const SimDomain& domain, const PointSet& points, const std::vector<std::uint8_t>& mask) {
    if (mask.size() != points.size())
        throw invalid_parameter("mutual_nearest_pairs: mask length must equal point count");
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < mask.size(); ++i)
        if (mask[i]) members.push_back(i);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    if (members.size() < 2) return out;
    GridIndex grid(domain, points);
    auto eligible = [&](std::uint32_t id) { return mask[id] != 0; };
    std::vector<std::int64_t> nn(points.size(), -1);
    for (std::uint32_t m : members) {
        auto q = grid.nearest(points.coords[m], m, eligible);
        nn[m] = q ? static_cast<std::int64_t>(q->second) : -1;
    }
    for (std::uint32_t m : members) {
        const std::int64_t p = nn[m];
        if (p >= 0 && m < p && nn[p] == m) out.emplace_back(m, static_cast<std::uint32_t>(p));
    }
    return out;
}

// Iterated mutually-nearest matching on a point subset. Equivalent to
// repeating "match all mutually closest pairs, remove them" until nothing is
// left; implemented with nearest-neighbor chains so each removal costs O(1)
// grid queries amortized. `members` must be sorted ascending so local slot
// order agrees with global index order (the tie-break).
inline MatchResult stable_match_on(const SimDomain& domain, const PointSet& points,
                                   std::span<const std::uint32_t> members) {
    MatchResult res;
    const std::size_t m = members.size();
    if (m == 0) return res;
    if (m == 1) {
        res.unmatched.push_back(members[0]);
        return res;
    }
    PointSet local;
    local.coords.reserve(m);
    for (auto g : members) local.coords.push_back(points.coords[g]);
    GridIndex grid(domain, local);

    std::vector<std::uint8_t> alive(m, 1);
    auto alive_pred = [&](std::uint32_t id) { return alive[id] != 0; };
    std::vector<std::int64_t> hint(m, -1);  // last known nearest; still valid while alive
    std::vector<std::uint32_t> chain;
    chain.reserve(64);

    for (std::uint32_t s = 0; s < m; ++s) {
        if (!alive[s]) continue;
        chain.assign(1, s);
        while (!chain.empty()) {
            const std::uint32_t t = chain.back();
            std::uint32_t u;
            if (hint[t] >= 0 && alive[hint[t]]) {
                u = static_cast<std::uint32_t>(hint[t]);
            } else {
                auto q = grid.nearest(local.coords[t], t, alive_pred);
                if (!q) {  // nothing else alive: t stays unmatched
                    alive[t] = 0;
                    res.unmatched.push_back(members[t]);
                    chain.pop_back();
                    continue;
                }
                u = q->second;
                hint[t] = u;
            }
            if (chain.size() >= 2 && chain[chain.size() - 2] == u) {
                alive[t] = 0;
                alive[u] = 0;
                chain.pop_back();
                chain.pop_back();
                const std::uint32_t ga = members[u], gb = members[t];
                res.pairs.emplace_back(std::min(ga, gb), std::max(ga, gb));
            } else {
                chain.push_back(u);
            }
        }
    }
    return res;
}

inline Matching stable_match(const SimDomain& domain, const PointSet& points,
                             const std::vector<std::uint8_t>& mask) {
    if (mask.size() != points.size())
        throw invalid_parameter("stable_match: mask length must equal point count");
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < mask.size(); ++i)
        if (mask[i]) members.push_back(i);
    auto res = stable_match_on(domain, points, members);
    Matching out;
    out.mask = mask;
    out.partner.assign(points.size(), -1);
    for (auto [a, b] : res.pairs) {
        out.partner[a] = b;
        out.partner[b] = a;
    }
    return out;
}

// Stability oracle: a pair {x, y}, not matched together, with d(x, y) strictly
// below both current partner distances (infinity when unmatched). Scans pairs
// in lexicographic index order; O(n^2), intended for verification.
inline std::optional<std::pair<std::uint32_t, std::uint32_t>> find_blocking_pair(
    const SimDomain& domain, const PointSet& points, const Matching& matching) {
    if (matching.partner.size() != points.size() || matching.mask.size() != points.size())
        throw invalid_parameter("find_blocking_pair: matching does not fit the point set");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> members;
    for (std::uint32_t i = 0; i < points.size(); ++i)
        if (matching.mask[i]) members.push_back(i);
    std::vector<double> pd(points.size(), inf);
    for (auto i : members)
        if (matching.partner[i] >= 0)
            pd[i] = domain.distance(points.coords[i], points.coords[matching.partner[i]]);
    for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
            const std::uint32_t i = members[a], j = members[b];
            if (matching.partner[i] == j) continue;
            const double d = domain.distance(points.coords[i], points.coords[j]);
            if (d < pd[i] && d < pd[j]) return std::make_pair(i, j);
        }
    }
    return std::nullopt;
}

// Items that must receive different colors, k colors available.
struct ColoringConstraints {
    std::uint32_t item_count = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> different;
    std::uint32_t color_count = 0;
};

// Randomized greedy proper coloring: items are visited in a uniformly shuffled
// order and each takes a uniform choice among the colors not used by its
// already-colored constraint neighbors. Never fails while the constraint
// graph's maximum degree is at most k - 1. Colors are 1-based.
inline std::vector<std::uint32_t> sample_constrained_coloring(const ColoringConstraints& cc,
                                                              Rng& rng) {
    const std::uint32_t n = cc.item_count;
    const std::uint32_t k = cc.color_count;
    if (k == 0) throw invalid_parameter("coloring: color count must be positive");
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (auto [a, b] : cc.different) {
        if (a >= n || b >= n || a == b)
            throw invalid_parameter("coloring: constraint endpoints out of range");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (std::uint32_t i = 0; i < n; ++i)
        if (adj[i].size() > k - 1)
            throw precondition_violation("coloring: constraint degree exceeds k - 1");
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::uint32_t> color(n, 0);
    std::vector<std::uint8_t> used(k + 1, 0);
    for (std::uint32_t item : order) {
        for (auto nb : adj[item])
            if (color[nb]) used[color[nb]] = 1;
        std::uint32_t free_count = 0;
        for (std::uint32_t c = 1; c <= k; ++c)
            if (!used[c]) ++free_count;
        std::uint32_t pick = static_cast<std::uint32_t>(rng.uniform_int(free_count));
        for (std::uint32_t c = 1; c <= k; ++c) {
            if (used[c]) continue;
            if (pick == 0) {
                color[item] = c;
                break;
            }
            --pick;
        }
        for (auto nb : adj[item])
            if (color[nb]) used[color[nb]] = 0;
    }
    return color;
}

}  // namespace stubmatch
