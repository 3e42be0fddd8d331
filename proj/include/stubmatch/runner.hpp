#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "stubmatch/config.hpp"
#include "stubmatch/stats.hpp"

namespace stubmatch {

inline constexpr const char* kVersion = "0.1.0";

inline std::string fmt_full(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct ReplicateRow {
    std::uint32_t replicate = 0;
    std::uint64_t point_count = 0;
    double mean_T = 0.0;
    double stderr_T = 0.0;
    double unpaired_fraction = 0.0;
    std::uint64_t self_loops = 0;
    std::uint64_t duplicate_edges = 0;
    std::uint64_t degree_mismatches = 0;
    std::uint64_t lb_violations = 0;
};

struct LevelRow {
    Stage stage;
    std::uint32_t level;
    std::uint64_t edge_count;
    double mean_length;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<ReplicateRow> rows;
    ReplicateRow aggregate;
    HCurve h;
    std::vector<LevelRow> levels;
    bool all_valid = true;
    double conservation_max_rel_err = 0.0;
    std::uint32_t truncation_m_used = 0;  // 0 unless scheme is truncated
};

namespace detail {

struct ReplicateOut {
    ReplicateRow row;
    std::vector<double> t_window;
    std::map<std::pair<std::uint8_t, std::uint32_t>, std::pair<std::uint64_t, double>> level_acc;
    std::uint64_t stubs_total = 0;
    std::uint64_t unpaired_total = 0;
    double conservation_rel_err = 0.0;
    std::size_t window_count = 0;
};

inline Pairing run_scheme(const ExperimentConfig& cfg, const SimDomain& domain,
                          const MarkedPointSet& marked, std::uint32_t m, Rng& rng) {
    switch (cfg.scheme) {
        case SchemeKind::rsmc: return rsmc(domain, marked, rng);
        case SchemeKind::sam: return sam(domain, marked, rng);
        default: return truncated_scheme(domain, marked, m, rng);
    }
}

inline ReplicateOut run_replicate(const ExperimentConfig& cfg, const DegreeDistribution& dist,
                                  std::uint32_t m, std::uint32_t r) {
    ReplicateOut out;
    out.row.replicate = r;
    const SimDomain domain(cfg.dim, cfg.box_side, cfg.boundary);
    Rng rng(cfg.seed ^ static_cast<std::uint64_t>(r));
    const PointSet pts = sample_poisson(domain, cfg.intensity, rng);
    const MarkedPointSet marked = mark_points(pts, dist, rng);
    const Pairing pairing = run_scheme(cfg, domain, marked, m, rng);
    const ValidationReport vr = validate_pairing(domain, marked, pairing);

    out.row.point_count = marked.size();
    out.row.unpaired_fraction = vr.unpaired_fraction;
    out.row.self_loops = vr.self_loop_count;
    out.row.duplicate_edges = vr.duplicate_edge_count;
    out.row.degree_mismatches = vr.degree_mismatch_count;
    out.row.lb_violations = vr.pointwise_lower_bound_violations;
    out.stubs_total = marked.total_stubs();
    out.unpaired_total = pairing.unpaired.size();

    const Window window = default_window(domain, marked, cfg.intensity);
    const auto t_all = per_point_total_length(domain, marked, pairing);
    double sum_t = 0.0;
    for (double v : t_all) sum_t += v;
    double sum_len = 0.0;
    for (const auto& e : pairing.edges) {
        const double len = domain.distance(marked.points.coords[e.a], marked.points.coords[e.b]);
        sum_len += len;
        auto& acc = out.level_acc[{static_cast<std::uint8_t>(e.stage), e.level}];
        ++acc.first;
        acc.second += len;
    }
    const double ref = std::max(1.0, 2.0 * sum_len);
    out.conservation_rel_err = std::fabs(sum_t - 2.0 * sum_len) / ref;

    out.t_window.reserve(t_all.size());
    double wsum = 0.0;
    for (std::size_t p = 0; p < t_all.size(); ++p)
        if (in_window(domain, window, marked.points.coords[p])) {
            out.t_window.push_back(t_all[p]);
            wsum += t_all[p];
        }
    out.window_count = out.t_window.size();
    if (out.window_count > 0) {
        out.row.mean_T = wsum / static_cast<double>(out.window_count);
        if (out.window_count > 1) {
            double ss = 0.0;
            for (double v : out.t_window) ss += (v - out.row.mean_T) * (v - out.row.mean_T);
            out.row.stderr_T = std::sqrt(ss / (static_cast<double>(out.window_count) - 1.0) /
                                         static_cast<double>(out.window_count));
        }
    }
    return out;
}

inline std::vector<double> auto_r_grid(std::vector<double> pooled, std::size_t count = 200) {
    std::vector<double> grid;
    if (pooled.empty()) return grid;
    std::sort(pooled.begin(), pooled.end());
    auto pct = [&](double q) {
        const std::size_t i = static_cast<std::size_t>(q * (pooled.size() - 1));
        return pooled[i];
    };
    double lo = pct(0.01), hi = pct(0.999);
    if (!(lo > 0.0)) {
        // log grid needs a positive start; fall back to the smallest positive T
        for (double v : pooled)
            if (v > 0.0) {
                lo = v;
                break;
            }
    }
    if (!(lo > 0.0) || !(hi > lo)) {
        grid.push_back(std::max(hi, 0.0));
        return grid;
    }
    grid.reserve(count);
    for (std::size_t g = 0; g < count; ++g)
        grid.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * g /
                                static_cast<double>(count - 1)));
    return grid;
}

}  // namespace detail

// Seeded replicate pipeline: replicate r derives its seed as seed XOR r, runs
// sample -> mark -> scheme -> validate -> estimate. Replicates may execute on
// several workers; aggregation is by replicate index, so the output does not
// depend on scheduling.
inline RunReport run_experiment(const ExperimentConfig& cfg, unsigned workers = 1) {
    RunReport report;
    report.config = cfg;
    const DegreeDistribution dist = cfg.degree.build();
    std::uint32_t m = 0;
    if (cfg.scheme == SchemeKind::truncated) {
        m = cfg.truncation_m ? *cfg.truncation_m : auto_truncation_m(dist, cfg.intensity);
        report.truncation_m_used = m;
    }

    const std::uint32_t R = cfg.replicates;
    std::vector<detail::ReplicateOut> outs(R);
    if (workers <= 1 || R == 1) {
        for (std::uint32_t r = 0; r < R; ++r) outs[r] = detail::run_replicate(cfg, dist, m, r);
    } else {
        std::atomic<std::uint32_t> next{0};
        std::exception_ptr first_error;
        std::mutex err_mutex;
        auto work = [&]() {
            for (;;) {
                const std::uint32_t r = next.fetch_add(1);
                if (r >= R) break;
                try {
                    outs[r] = detail::run_replicate(cfg, dist, m, r);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const unsigned nw = std::min<unsigned>(workers, R);
        for (unsigned w = 0; w < nw; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<double> pooled;
    std::map<std::pair<std::uint8_t, std::uint32_t>, std::pair<std::uint64_t, double>> level_acc;
    std::uint64_t stubs_total = 0, unpaired_total = 0, points_total = 0, wcount_total = 0;
    double wsum_total = 0.0;
    for (std::uint32_t r = 0; r < R; ++r) {
        auto& o = outs[r];
        report.rows.push_back(o.row);
        report.all_valid = report.all_valid && o.row.self_loops == 0 &&
                           o.row.duplicate_edges == 0 && o.row.degree_mismatches == 0 &&
                           o.row.lb_violations == 0;
        report.conservation_max_rel_err =
            std::max(report.conservation_max_rel_err, o.conservation_rel_err);
        pooled.insert(pooled.end(), o.t_window.begin(), o.t_window.end());
        for (auto& [k, v] : o.level_acc) {
            auto& acc = level_acc[k];
            acc.first += v.first;
            acc.second += v.second;
        }
        stubs_total += o.stubs_total;
        unpaired_total += o.unpaired_total;
        points_total += o.row.point_count;
        wcount_total += o.window_count;
        wsum_total += o.row.mean_T * static_cast<double>(o.window_count);
    }

    report.aggregate.replicate = R;  // written as "aggregate" in the CSV
    report.aggregate.point_count = points_total;
    report.aggregate.mean_T = wcount_total ? wsum_total / static_cast<double>(wcount_total) : 0.0;
    if (R > 1) {
        double mean_of_means = 0.0;
        for (const auto& row : report.rows) mean_of_means += row.mean_T;
        mean_of_means /= R;
        double ss = 0.0;
        for (const auto& row : report.rows)
            ss += (row.mean_T - mean_of_means) * (row.mean_T - mean_of_means);
        report.aggregate.stderr_T = std::sqrt(ss / (R - 1.0) / R);
    } else if (R == 1) {
        report.aggregate.stderr_T = report.rows[0].stderr_T;
    }
    report.aggregate.unpaired_fraction =
        stubs_total ? static_cast<double>(unpaired_total) / static_cast<double>(stubs_total) : 0.0;
    for (const auto& row : report.rows) {
        report.aggregate.self_loops += row.self_loops;
        report.aggregate.duplicate_edges += row.duplicate_edges;
        report.aggregate.degree_mismatches += row.degree_mismatches;
        report.aggregate.lb_violations += row.lb_violations;
    }

    // pooled H curve
    std::vector<double> grid;
    if (cfg.r_grid.automatic) {
        grid = detail::auto_r_grid(pooled);
    } else {
        grid.reserve(cfg.r_grid.count);
        for (std::size_t g = 0; g < cfg.r_grid.count; ++g)
            grid.push_back(std::exp(std::log(cfg.r_grid.lo) +
                                    (std::log(cfg.r_grid.hi) - std::log(cfg.r_grid.lo)) * g /
                                        static_cast<double>(cfg.r_grid.count - 1)));
    }
    report.h.r = grid;
    report.h.empty = pooled.empty();
    if (!pooled.empty()) {
        std::sort(pooled.begin(), pooled.end());
        for (double r : grid) {
            const auto it = std::upper_bound(pooled.begin(), pooled.end(), r);
            report.h.h.push_back(static_cast<double>(it - pooled.begin()) /
                                 static_cast<double>(pooled.size()));
        }
    } else {
        report.h.h.assign(grid.size(), 0.0);
    }

    for (auto& [k, v] : level_acc)
        report.levels.push_back(LevelRow{static_cast<Stage>(k.first), k.second, v.first,
                                         v.second / static_cast<double>(v.first)});
    return report;
}

inline std::string summary_csv(const RunReport& report) {
    std::string s =
        "replicate,point_count,mean_T,stderr_T,unpaired_fraction,self_loops,duplicate_edges,"
        "degree_mismatches,lb_violations\n";
    auto add = [&](const std::string& id, const ReplicateRow& r) {
        s += id + ',' + std::to_string(r.point_count) + ',' + fmt_full(r.mean_T) + ',' +
             fmt_full(r.stderr_T) + ',' + fmt_full(r.unpaired_fraction) + ',' +
             std::to_string(r.self_loops) + ',' + std::to_string(r.duplicate_edges) + ',' +
             std::to_string(r.degree_mismatches) + ',' + std::to_string(r.lb_violations) + '\n';
    };
    for (const auto& row : report.rows) add(std::to_string(row.replicate), row);
    add("aggregate", report.aggregate);
    return s;
}

inline std::string h_curve_csv(const RunReport& report) {
    std::string s = "r,H\n";
    for (std::size_t i = 0; i < report.h.r.size(); ++i)
        s += fmt_full(report.h.r[i]) + ',' + fmt_full(report.h.h[i]) + '\n';
    return s;
}

inline std::string levels_csv(const RunReport& report) {
    std::string s = "stage,level,edge_count,mean_length\n";
    for (const auto& row : report.levels)
        s += std::string(stage_name(row.stage)) + ',' + std::to_string(row.level) + ',' +
             std::to_string(row.edge_count) + ',' + fmt_full(row.mean_length) + '\n';
    return s;
}

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["dim"] = cfg.dim;
    j["box_side"] = cfg.box_side;
    j["intensity"] = cfg.intensity;
    j["boundary"] = cfg.boundary == Boundary::torus ? "torus" : "euclidean_window";
    j["degree"] = cfg.degree.describe();
    j["scheme"] = scheme_name(cfg.scheme);
    j["truncation_m"] = cfg.truncation_m ? nlohmann::ordered_json(*cfg.truncation_m)
                                         : nlohmann::ordered_json("auto");
    j["replicates"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j;
}

inline nlohmann::ordered_json report_json(const RunReport& report) {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["config"] = config_json(report.config);
    if (report.config.scheme == SchemeKind::truncated)
        j["truncation_m_used"] = report.truncation_m_used;
    auto row_json = [](const ReplicateRow& r, bool aggregate) {
        nlohmann::ordered_json o;
        o["replicate"] = aggregate ? nlohmann::ordered_json("aggregate")
                                   : nlohmann::ordered_json(r.replicate);
        o["point_count"] = r.point_count;
        o["mean_T"] = r.mean_T;
        o["stderr_T"] = r.stderr_T;
        o["unpaired_fraction"] = r.unpaired_fraction;
        o["self_loops"] = r.self_loops;
        o["duplicate_edges"] = r.duplicate_edges;
        o["degree_mismatches"] = r.degree_mismatches;
        o["lb_violations"] = r.lb_violations;
        return o;
    };
    j["replicates"] = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) j["replicates"].push_back(row_json(row, false));
    j["aggregate"] = row_json(report.aggregate, true);
    j["all_valid"] = report.all_valid;
    j["conservation_max_rel_err"] = report.conservation_max_rel_err;
    j["files"] = {"summary.csv", "h_curve.csv", "levels.csv", "report.json"};
    return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot write " + path.string());
    os << content;
}

inline void write_run_files(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "summary.csv", summary_csv(report));
    write_text(fs::path(out_dir) / "h_curve.csv", h_curve_csv(report));
    write_text(fs::path(out_dir) / "levels.csv", levels_csv(report));
    write_text(fs::path(out_dir) / "report.json", report_json(report).dump(2) + "\n");
}

// Independent runs over one swept parameter; run k derives its seed as
// splitmix64(seed XOR (k + 1)). Writes per-value directories plus sweep.csv.
inline std::vector<RunReport> sweep(const ExperimentConfig& base, const std::string& param,
                                    const std::vector<std::string>& values, unsigned workers,
                                    const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (param != "box_side" && param != "degree.tau" && param != "truncation_m")
        throw invalid_parameter("sweep: unsupported parameter '" + param + "'");
    std::vector<RunReport> reports;
    std::string csv =
        "param,value,point_count,mean_T,stderr_T,unpaired_fraction,self_loops,duplicate_edges,"
        "degree_mismatches,lb_violations\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        ExperimentConfig cfg = base;
        const std::string& v = values[k];
        if (param == "box_side") {
            cfg.box_side = detail::parse_double(param, v);
            if (!(cfg.box_side > 0.0)) throw invalid_parameter("sweep: box_side must be positive");
        } else if (param == "degree.tau") {
            if (cfg.degree.family != DegreeFamily::zipf)
                throw invalid_parameter("sweep: degree.tau requires a zipf degree family");
            cfg.degree.tau = detail::parse_double(param, v);
        } else {
            if (v == "auto") cfg.truncation_m = std::nullopt;
            else cfg.truncation_m = static_cast<std::uint32_t>(detail::parse_u64(param, v));
        }
        cfg.seed = splitmix64(base.seed ^ static_cast<std::uint64_t>(k + 1));
        RunReport rep = run_experiment(cfg, workers);
        const std::string sub = (fs::path(out_dir) / (param + "=" + v)).string();
        write_run_files(rep, sub);
        const auto& a = rep.aggregate;
        csv += param + ',' + v + ',' + std::to_string(a.point_count) + ',' + fmt_full(a.mean_T) +
               ',' + fmt_full(a.stderr_T) + ',' + fmt_full(a.unpaired_fraction) + ',' +
               std::to_string(a.self_loops) + ',' + std::to_string(a.duplicate_edges) + ',' +
               std::to_string(a.degree_mismatches) + ',' + std::to_string(a.lb_violations) + '\n';
        reports.push_back(std::move(rep));
    }
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "sweep.csv", csv);
    return reports;
}

}  // namespace stubmatch
