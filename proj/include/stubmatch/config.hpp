#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stubmatch/degrees.hpp"
#include "stubmatch/errors.hpp"
#include "stubmatch/geometry.hpp"

namespace stubmatch {

enum class SchemeKind { rsmc, sam, truncated };

inline const char* scheme_name(SchemeKind s) {
    switch (s) {
        case SchemeKind::rsmc: return "rsmc";
        case SchemeKind::sam: return "sam";
        default: return "truncated";
    }
}

struct DegreeSpec {
    DegreeFamily family = DegreeFamily::deterministic;
    std::uint32_t u = 0;
    double q = 0.0;
    double mu = 0.0;
    double tau = 0.0;
    std::optional<std::uint64_t> cutoff;
    std::vector<std::pair<std::uint32_t, double>> pmf;

    DegreeDistribution build() const {
        switch (family) {
            case DegreeFamily::deterministic: return DegreeDistribution::deterministic(u);
            case DegreeFamily::geometric: return DegreeDistribution::geometric(q);
            case DegreeFamily::poisson: return DegreeDistribution::poisson(mu);
            case DegreeFamily::zipf: return DegreeDistribution::zipf(tau, cutoff);
            default: return DegreeDistribution::explicit_pmf(pmf);
        }
    }

    std::string describe() const {
        std::ostringstream os;
        switch (family) {
            case DegreeFamily::deterministic: os << "deterministic(" << u << ")"; break;
            case DegreeFamily::geometric: os << "geometric(" << q << ")"; break;
            case DegreeFamily::poisson: os << "poisson(" << mu << ")"; break;
            case DegreeFamily::zipf:
                os << "zipf(" << tau;
                if (cutoff) os << ",cutoff=" << *cutoff;
                os << ")";
                break;
            default: os << "explicit"; break;
        }
        return os.str();
    }
};

struct RGridSpec {
    bool automatic = true;
    double lo = 0.0, hi = 0.0;
    std::size_t count = 200;
};

struct ExperimentConfig {
    int dim = 0;
    double box_side = 0.0;
    double intensity = 1.0;
    Boundary boundary = Boundary::torus;
    DegreeSpec degree;
    SchemeKind scheme = SchemeKind::rsmc;
    std::optional<std::uint32_t> truncation_m;  // nullopt = auto
    std::uint32_t replicates = 1;
    std::uint64_t seed = 0;
    RGridSpec r_grid;
    std::string output_dir = "out";
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty())
        throw parse_error("config: key '" + std::string(key) + "' has malformed number '" + s + "'");
    return x;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    std::uint64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw parse_error("config: key '" + std::string(key) + "' has malformed integer '" +
                          std::string(v) + "'");
    return x;
}

inline std::vector<std::pair<std::uint32_t, double>> parse_pmf(std::string_view v) {
    std::vector<std::pair<std::uint32_t, double>> out;
    std::string entry;
    std::istringstream is{std::string(v)};
    while (std::getline(is, entry, ',')) {
        const auto colon = entry.find(':');
        if (colon == std::string::npos)
            throw parse_error("config: key 'degree.pmf' expects 'i:p,i:p,...'");
        const auto iv = trim(std::string_view(entry).substr(0, colon));
        const auto pv = trim(std::string_view(entry).substr(colon + 1));
        out.emplace_back(static_cast<std::uint32_t>(parse_u64("degree.pmf", iv)),
                         parse_double("degree.pmf", pv));
    }
    if (out.empty()) throw parse_error("config: key 'degree.pmf' is empty");
    return out;
}

}  // namespace detail

// Flat key = value text, one entry per line, '#' comments. Unknown keys are
// rejected by name. Required: dim, box_side, degree.family, scheme, seed.
inline ExperimentConfig parse_config(const std::string& text) {
    using detail::trim;
    ExperimentConfig cfg;
    bool saw_dim = false, saw_side = false, saw_family = false, saw_scheme = false, saw_seed = false;
    bool saw_u = false, saw_q = false, saw_mu = false, saw_tau = false, saw_pmf = false;

    std::istringstream is(text);
    std::string raw;
    while (std::getline(is, raw)) {
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw parse_error("config: line without '=': '" + std::string(line) + "'");
        const std::string key{trim(line.substr(0, eq))};
        const std::string val{trim(line.substr(eq + 1))};
        if (val.empty()) throw parse_error("config: key '" + key + "' has empty value");

        if (key == "dim") {
            cfg.dim = static_cast<int>(detail::parse_u64(key, val));
            saw_dim = true;
        } else if (key == "box_side") {
            cfg.box_side = detail::parse_double(key, val);
            saw_side = true;
        } else if (key == "intensity") {
            cfg.intensity = detail::parse_double(key, val);
        } else if (key == "boundary") {
            if (val == "torus") cfg.boundary = Boundary::torus;
            else if (val == "euclidean_window") cfg.boundary = Boundary::euclidean_window;
            else throw parse_error("config: key 'boundary' must be torus or euclidean_window");
        } else if (key == "degree.family") {
            if (val == "deterministic") cfg.degree.family = DegreeFamily::deterministic;
            else if (val == "geometric") cfg.degree.family = DegreeFamily::geometric;
            else if (val == "poisson") cfg.degree.family = DegreeFamily::poisson;
            else if (val == "zipf") cfg.degree.family = DegreeFamily::zipf;
            else if (val == "explicit") cfg.degree.family = DegreeFamily::explicit_pmf;
            else throw parse_error("config: key 'degree.family' has unknown family '" + val + "'");
            saw_family = true;
        } else if (key == "degree.u") {
            cfg.degree.u = static_cast<std::uint32_t>(detail::parse_u64(key, val));
            saw_u = true;
        } else if (key == "degree.q") {
            cfg.degree.q = detail::parse_double(key, val);
            saw_q = true;
        } else if (key == "degree.mu") {
            cfg.degree.mu = detail::parse_double(key, val);
            saw_mu = true;
        } else if (key == "degree.tau") {
            cfg.degree.tau = detail::parse_double(key, val);
            saw_tau = true;
        } else if (key == "degree.cutoff") {
            cfg.degree.cutoff = detail::parse_u64(key, val);
        } else if (key == "degree.pmf") {
            cfg.degree.pmf = detail::parse_pmf(val);
            saw_pmf = true;
        } else if (key == "scheme") {
            if (val == "rsmc") cfg.scheme = SchemeKind::rsmc;
            else if (val == "sam") cfg.scheme = SchemeKind::sam;
            else if (val == "truncated") cfg.scheme = SchemeKind::truncated;
            else throw parse_error("config: key 'scheme' must be rsmc, sam or truncated");
            saw_scheme = true;
        } else if (key == "truncation_m") {
            if (val == "auto") cfg.truncation_m = std::nullopt;
            else cfg.truncation_m = static_cast<std::uint32_t>(detail::parse_u64(key, val));
        } else if (key == "replicates") {
            cfg.replicates = static_cast<std::uint32_t>(detail::parse_u64(key, val));
        } else if (key == "seed") {
            cfg.seed = detail::parse_u64(key, val);
            saw_seed = true;
        } else if (key == "r_grid") {
            if (val == "auto") {
                cfg.r_grid = RGridSpec{};
            } else {
                RGridSpec g;
                g.automatic = false;
                std::istringstream gs(val);
                std::string a, b, c;
                if (!std::getline(gs, a, ':') || !std::getline(gs, b, ':') || !std::getline(gs, c))
                    throw parse_error("config: key 'r_grid' expects auto or lo:hi:count");
                g.lo = detail::parse_double(key, trim(a));
                g.hi = detail::parse_double(key, trim(b));
                g.count = detail::parse_u64(key, trim(c));
                if (!(g.lo > 0.0) || !(g.hi > g.lo) || g.count < 2)
                    throw parse_error("config: key 'r_grid' needs 0 < lo < hi and count >= 2");
                cfg.r_grid = g;
            }
        } else if (key == "output_dir") {
            cfg.output_dir = val;
        } else {
            throw parse_error("config: unknown key '" + key + "'");
        }
    }

    if (!saw_dim) throw parse_error("config: missing required key 'dim'");
    if (!saw_side) throw parse_error("config: missing required key 'box_side'");
    if (!saw_family) throw parse_error("config: missing required key 'degree.family'");
    if (!saw_scheme) throw parse_error("config: missing required key 'scheme'");
    if (!saw_seed) throw parse_error("config: missing required key 'seed'");

    if (cfg.dim < 1 || cfg.dim > 3)
        throw parse_error("config: key 'dim' must be 1, 2 or 3");
    if (!(cfg.box_side > 0.0))
        throw parse_error("config: key 'box_side' must be positive");
    if (!(cfg.intensity > 0.0))
        throw parse_error("config: key 'intensity' must be positive");
    if (cfg.replicates < 1)
        throw parse_error("config: key 'replicates' must be at least 1");

    // family parameter cross-checks
    auto need = [&](bool saw, const char* k) {
        if (!saw) throw parse_error(std::string("config: degree.family requires key '") + k + "'");
    };
    auto forbid = [&](bool saw, const char* k) {
        if (saw)
            throw parse_error(std::string("config: key '") + k +
                              "' does not apply to this degree.family");
    };
    switch (cfg.degree.family) {
        case DegreeFamily::deterministic:
            need(saw_u, "degree.u");
            forbid(saw_q, "degree.q"); forbid(saw_mu, "degree.mu");
            forbid(saw_tau, "degree.tau"); forbid(saw_pmf, "degree.pmf");
            forbid(cfg.degree.cutoff.has_value(), "degree.cutoff");
            break;
        case DegreeFamily::geometric:
            need(saw_q, "degree.q");
            forbid(saw_u, "degree.u"); forbid(saw_mu, "degree.mu");
            forbid(saw_tau, "degree.tau"); forbid(saw_pmf, "degree.pmf");
            forbid(cfg.degree.cutoff.has_value(), "degree.cutoff");
            break;
        case DegreeFamily::poisson:
            need(saw_mu, "degree.mu");
            forbid(saw_u, "degree.u"); forbid(saw_q, "degree.q");
            forbid(saw_tau, "degree.tau"); forbid(saw_pmf, "degree.pmf");
            forbid(cfg.degree.cutoff.has_value(), "degree.cutoff");
            break;
        case DegreeFamily::zipf:
            need(saw_tau, "degree.tau");
            forbid(saw_u, "degree.u"); forbid(saw_q, "degree.q");
            forbid(saw_mu, "degree.mu"); forbid(saw_pmf, "degree.pmf");
            break;
        case DegreeFamily::explicit_pmf:
            need(saw_pmf, "degree.pmf");
            forbid(saw_u, "degree.u"); forbid(saw_q, "degree.q");
            forbid(saw_mu, "degree.mu"); forbid(saw_tau, "degree.tau");
            forbid(cfg.degree.cutoff.has_value(), "degree.cutoff");
            break;
    }

    // scheme cross-checks, before any sampling happens
    if (cfg.scheme == SchemeKind::sam && cfg.dim != 1)
        throw invalid_dimension("config: scheme sam requires dim = 1");
    if (cfg.scheme == SchemeKind::truncated) {
        if (std::fabs(cfg.box_side - std::round(cfg.box_side)) > 1e-9 || cfg.box_side < 1.0)
            throw parse_error("config: scheme truncated requires an integer box_side");
    }

    cfg.degree.build();  // validates family parameters
    return cfg;
}

}  // namespace stubmatch
