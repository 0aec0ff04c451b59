// brqlab: configuration-driven sweeps and the acceptance suite for the
// feedback-limited retransmission lab.
//
// Exit codes: 0 pass, 1 verification failure, 2 config error, 3 numeric
// failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "brq/sweep.hpp"
#include "brq/verify.hpp"

int main(int argc, char** argv) {
    CLI::App app{"feedback-limited retransmission protocol lab"};
    app.require_subcommand(1);

    // run: compute a sweep CSV from a JSON config.
    std::string config_path, out_dir = ".";
    bool dump_traces = false, dump_kernels = false, dump_policy = false;
    unsigned workers = 1;
    std::optional<std::uint64_t> seed;
    CLI::App* run = app.add_subcommand("run", "run a sweep from a JSON config");
    run->add_option("--config", config_path, "path to the sweep config")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_flag("--dump-traces", dump_traces, "write per-row episode traces (jsonl)");
    run->add_flag("--dump-kernels", dump_kernels, "write solved W/M grids (csv)");
    run->add_flag("--dump-policy", dump_policy, "write power policy grids (csv)");
    run->add_option("--workers", workers, "monte carlo worker threads");
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt = run->add_option("--seed", seed_value, "override the config seed");

    // verify: acceptance suite.
    std::string suite = "fast";
    unsigned v_workers = 1;
    CLI::App* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("suite", suite, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));
    verify->add_option("--workers", v_workers, "monte carlo worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            brq::SweepConfig cfg;
            try {
                cfg = brq::load_sweep_config(config_path);
            } catch (const brq::ConfigError& e) {
                std::cerr << "config error: " << e.what() << "\n";
                return 2;
            }
            brq::SweepOptions opts;
            opts.out_dir = out_dir;
            opts.dump_traces = dump_traces;
            opts.dump_kernels = dump_kernels;
            opts.dump_policy = dump_policy;
            opts.workers = workers;
            if (*seed_opt) opts.seed_override = seed_value;
            const brq::SweepSummary summary = brq::run_sweep(cfg, opts);
            std::cout << "wrote " << summary.csv_path << " (" << summary.rows.size()
                      << " rows, " << summary.n_errors << " errors)\n";
            for (const auto& row : summary.rows)
                if (row.status != "ok")
                    std::cerr << row.protocol << " T=" << row.target_t << ": "
                              << row.status << "\n";
            return summary.n_errors == 0 ? 0 : 3;
        }
        const bool full = suite == "full";
        const auto results = brq::run_acceptance(full, v_workers, std::cout);
        for (const auto& r : results)
            if (!r.pass) return 1;
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}
