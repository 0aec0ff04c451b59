#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "brq/analysis.hpp"
#include "brq/channel.hpp"
#include "brq/fredholm.hpp"
#include "brq/mc.hpp"
#include "brq/powerdp.hpp"
#include "brq/protocols.hpp"

namespace brq {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FigureKind { ThroughputVsDelay, ThroughputVsSnr };

struct ProtocolSpec {
    std::string name; // brq | ems | harq-inr | harq-inr-p
    int f = 0;        // ems only
};

struct SweepConfig {
    double snr_db = 10.0;
    FigureKind figure = FigureKind::ThroughputVsDelay;
    std::vector<ProtocolSpec> protocols;
    std::vector<double> t_grid;      // ThroughputVsDelay
    std::vector<double> snr_grid_db; // ThroughputVsSnr
    double target_t = 0.0;           // ThroughputVsSnr
    std::size_t mc_episodes = 0;     // 0 disables the MC verdict column
    std::uint64_t mc_seed = 1;
    std::string output = "sweep.csv";
};

namespace sweep_detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

inline std::vector<double> sorted_grid(const nlohmann::json& j, const std::string& name) {
    if (!j.is_array() || j.empty())
        throw ConfigError(name + " must be a nonempty array");
    std::vector<double> g = j.get<std::vector<double>>();
    if (!std::is_sorted(g.begin(), g.end()))
        throw ConfigError(name + " must be sorted ascending");
    return g;
}

} // namespace sweep_detail

inline SweepConfig parse_sweep_config(const nlohmann::json& j) {
    using sweep_detail::require_keys;
    SweepConfig cfg;
    try {
        require_keys(j, {"channel", "figure", "protocols", "t_grid", "snr_grid_db",
                         "target_t", "mc", "output"},
                     "config root");
        if (!j.contains("channel")) throw ConfigError("missing \"channel\"");
        const auto& ch = j.at("channel");
        require_keys(ch, {"family", "snr_db"}, "channel");
        if (ch.at("family").get<std::string>() != "rayleigh")
            throw ConfigError("channel.family: only \"rayleigh\" is configurable");
        cfg.snr_db = ch.at("snr_db").get<double>();

        const std::string fig = j.value("figure", std::string("throughput_vs_delay"));
        if (fig == "throughput_vs_delay")
            cfg.figure = FigureKind::ThroughputVsDelay;
        else if (fig == "throughput_vs_snr")
            cfg.figure = FigureKind::ThroughputVsSnr;
        else
            throw ConfigError("figure must be throughput_vs_delay or throughput_vs_snr");

        if (!j.contains("protocols") || !j.at("protocols").is_array())
            throw ConfigError("protocols must be an array");
        for (const auto& p : j.at("protocols")) {
            require_keys(p, {"name", "f"}, "protocols[]");
            ProtocolSpec ps;
            ps.name = p.at("name").get<std::string>();
            if (ps.name == "ems") {
                ps.f = p.at("f").get<int>();
                if (ps.f < 1) throw ConfigError("ems.f must be >= 1");
            } else if (ps.name != "brq" && ps.name != "harq-inr" &&
                       ps.name != "harq-inr-p") {
                throw ConfigError("unknown protocol \"" + ps.name + "\"");
            }
            cfg.protocols.push_back(ps);
        }

        if (cfg.figure == FigureKind::ThroughputVsDelay) {
            cfg.t_grid = sweep_detail::sorted_grid(j.at("t_grid"), "t_grid");
        } else {
            cfg.snr_grid_db = sweep_detail::sorted_grid(j.at("snr_grid_db"), "snr_grid_db");
            cfg.target_t = j.at("target_t").get<double>();
            if (!(cfg.target_t > 1.0)) throw ConfigError("target_t must exceed 1");
        }

        if (j.contains("mc")) {
            const auto& mc = j.at("mc");
            require_keys(mc, {"episodes", "seed"}, "mc");
            cfg.mc_episodes = mc.at("episodes").get<std::size_t>();
            cfg.mc_seed = mc.value("seed", std::uint64_t{1});
            if (cfg.mc_episodes > 0 && cfg.mc_episodes < 10000)
                throw ConfigError("mc.episodes must be >= 10000 for verdict-bearing runs");
        }
        cfg.output = j.value("output", std::string("sweep.csv"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config schema: ") + e.what());
    }
    return cfg;
}

inline SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return parse_sweep_config(j);
}

struct SweepOptions {
    std::string out_dir = ".";
    bool dump_traces = false;
    bool dump_kernels = false;
    bool dump_policy = false;
    unsigned workers = 1;
    std::optional<std::uint64_t> seed_override;
};

struct SweepRow {
    std::string protocol;
    double param = 0.0;
    double snr_db = 0.0;
    double target_t = 0.0;
    TradeoffPoint analytic;
    bool has_mc = false;
    RenewalEstimate mc;
    Verdict verdict;
    std::string status = "ok"; // "ok" | "error:<what>"
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    std::size_t n_errors = 0;
    std::string csv_path;
};

namespace sweep_detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string protocol_label(const ProtocolSpec& p) {
    if (p.name == "ems") return "ems" + std::to_string(p.f + 1); // feedback cost f+1
    return p.name;
}

inline void dump_traces_jsonl(const std::string& path, const RatePolicy& policy,
                              const Channel& ch, std::uint64_t seed, std::size_t count) {
    std::ofstream out(path);
    for (std::size_t e = 0; e < count; ++e) {
        ChannelGainStream stream(ch, CounterRng::for_episode(seed, e));
        const EpisodeTrace tr = run_episode(policy, stream);
        nlohmann::json j{{"episode", e},
                         {"gains", tr.gains},
                         {"rates", tr.rates},
                         {"feedback", tr.feedback},
                         {"tau", tr.tau},
                         {"cum_rate", tr.cum_rate},
                         {"max_unresolved_at_stop", tr.max_unresolved_at_stop}};
        out << j.dump() << "\n";
    }
}

inline void dump_gridded_csv(const std::string& path, const GriddedFunction& g) {
    std::ofstream out(path);
    out << "node,u,value\n";
    for (std::size_t i = 0; i < g.size(); ++i)
        out << i << "," << fmt(g.node_u(i)) << "," << fmt(g[i]) << "\n";
}

inline void dump_policy_csv(const std::string& path, const ValueFunctionGrid& g) {
    std::ofstream out(path);
    out << "u,J,rho_star\n";
    for (std::size_t i = 0; i < g.u.size(); ++i)
        out << fmt(g.u[i]) << "," << fmt(g.value[i]) << "," << fmt(g.rho_star[i]) << "\n";
}

// Analytic trade-off point + simulation policy for one (protocol, T, channel)
// cell; solves for the parameter hitting target T where needed.
inline SweepRow solve_cell(const ProtocolSpec& p, const Channel& ch, double snr_db,
                           double target_t, const SweepConfig& cfg,
                           const SweepOptions& opt, std::size_t row_idx) {
    SweepRow row;
    row.protocol = protocol_label(p);
    row.snr_db = snr_db;
    row.target_t = target_t;

    std::optional<RatePolicy> policy;
    if (p.name == "brq") {
        const double h_t = brq_threshold(ch, target_t);
        row.analytic.protocol = row.protocol;
        row.analytic.param = h_t;
        row.analytic.avg_decoding_time = target_t;
        row.analytic.throughput = eta_brq(ch, target_t);
        policy = RatePolicy::brq(h_t);
    } else if (p.name == "ems") {
        const double r = ems_rate_for_tau(ch, p.f, target_t);
        row.analytic = ems_metrics(ch, r, p.f);
        policy = RatePolicy::ems(r, p.f);
        if (opt.dump_kernels) {
            const auto base = std::filesystem::path(opt.out_dir) /
                              ("kernel_" + row.protocol + "_row" + std::to_string(row_idx));
            dump_gridded_csv(base.string() + "_W.csv", solve_W(ch, r, p.f));
            dump_gridded_csv(base.string() + "_M.csv", solve_M(ch, r, p.f));
        }
    } else if (p.name == "harq-inr") {
        row.analytic = eta_harq_inr(ch, target_t);
        if (row.analytic.param > 0.0) policy = RatePolicy::harq_inr(row.analytic.param);
    } else { // harq-inr-p
        PowerDpOptions dp_opts;
        dp_opts.grid_nodes = 512;
        dp_opts.gl_order = 16;
        row.analytic = eta_harq_inr_p(ch, target_t, dp_opts);
        if (opt.dump_policy && row.analytic.param > 0.0) {
            const DualSolution sol = dual_solve(ch, row.analytic.param, dp_opts);
            const auto path = std::filesystem::path(opt.out_dir) /
                              ("policy_row" + std::to_string(row_idx) + ".csv");
            dump_policy_csv(path.string(), sol.grid);
        }
    }
    row.param = row.analytic.param;

    if (cfg.mc_episodes > 0 && policy) {
        row.mc = estimate(*policy, ch, cfg.mc_episodes,
                          opt.seed_override.value_or(cfg.mc_seed) + row_idx, opt.workers);
        row.verdict = compare(row.mc, row.analytic);
        row.has_mc = true;
        if (opt.dump_traces) {
            const auto path = std::filesystem::path(opt.out_dir) /
                              ("traces_" + row.protocol + "_row" + std::to_string(row_idx) +
                               ".jsonl");
            dump_traces_jsonl(path.string(), *policy, ch,
                              opt.seed_override.value_or(cfg.mc_seed) + row_idx, 16);
        }
    }
    return row;
}

} // namespace sweep_detail

inline constexpr const char* kSweepCsvHeader =
    "protocol,param,snr_db,target_T,analytic_T,analytic_eta,mc_eta,mc_eta_se,mc_T,"
    "mc_T_se,verdict";

inline SweepSummary run_sweep(const SweepConfig& cfg, const SweepOptions& opt = {}) {
    SweepSummary summary;
    std::filesystem::create_directories(opt.out_dir);

    struct Cell {
        ProtocolSpec proto;
        double snr_db, target_t;
    };
    std::vector<Cell> cells;
    if (cfg.figure == FigureKind::ThroughputVsDelay) {
        for (double t : cfg.t_grid)
            for (const auto& p : cfg.protocols) cells.push_back({p, cfg.snr_db, t});
    } else {
        for (double snr : cfg.snr_grid_db)
            for (const auto& p : cfg.protocols) cells.push_back({p, snr, cfg.target_t});
    }

    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Channel ch = Channel::rayleigh_db(cells[i].snr_db);
        SweepRow row;
        try {
            row = sweep_detail::solve_cell(cells[i].proto, ch, cells[i].snr_db,
                                           cells[i].target_t, cfg, opt, i);
        } catch (const std::exception& e) {
            row.protocol = sweep_detail::protocol_label(cells[i].proto);
            row.snr_db = cells[i].snr_db;
            row.target_t = cells[i].target_t;
            row.status = std::string("error:") + e.what();
            ++summary.n_errors;
        }
        summary.rows.push_back(std::move(row));
    }

    const auto csv_path = std::filesystem::path(opt.out_dir) / cfg.output;
    std::ofstream out(csv_path);
    out << kSweepCsvHeader << "\n";
    for (const auto& row : summary.rows) {
        using sweep_detail::fmt;
        out << row.protocol << "," << fmt(row.param) << "," << fmt(row.snr_db) << ","
            << fmt(row.target_t) << ",";
        if (row.status != "ok") {
            out << ",,,,,," << row.status << "\n";
            continue;
        }
        out << fmt(row.analytic.avg_decoding_time) << "," << fmt(row.analytic.throughput)
            << ",";
        if (row.has_mc) {
            out << fmt(row.mc.throughput) << "," << fmt(row.mc.throughput_se) << ","
                << fmt(row.mc.mean_tau) << "," << fmt(row.mc.mean_tau_se) << ","
                << (row.verdict.pass ? "pass" : "fail");
        } else {
            out << ",,,,none";
        }
        out << "\n";
    }
    summary.csv_path = csv_path.string();
    return summary;
}

} // namespace brq
