#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crlbpf/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Privacy-preserving state estimation with a CRLB-constrained noise design"};
    app.require_subcommand(1);

    crlbpf::experiments::ExperimentConfig cfg;
    cfg.runs = 0;  // resolved per subcommand after parsing

    auto* run = app.add_subcommand("run", "per-step trajectory/estimate/attack detail CSV");
    auto* mc = app.add_subcommand("mc", "averaged MSEs over Monte Carlo runs per gamma");
    auto* bench = app.add_subcommand("bench", "oracle vs windowed path timing CSV");
    auto* dp = app.add_subcommand("dp-curve", "(gamma, epsilon) -> delta CSV");
    for (auto* c : {run, mc, bench, dp}) {
        c->add_option("--config", cfg.scenario,
                      "scenario: 'building', 'two_dim', or path to a JSON config");
        c->add_option("--gamma", cfg.gammas,
                      "privacy level(s); scenario default when omitted");
        c->add_option("--window", cfg.window, "adversary window N_s (scenario default when 0)");
        c->add_option("--sigma", cfg.sigma_floor, "noise floor sigma");
        c->add_option("--runs", cfg.runs, "Monte Carlo run count");
        c->add_option("--horizon", cfg.horizon, "number of time steps");
        c->add_option("--seed", cfg.master_seed, "master seed");
        c->add_option("--out", cfg.output_dir, "output directory");
        c->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
        c->add_option("--epsilon", cfg.epsilon_grid, "epsilon grid for dp-curve");
        c->add_flag("--oracle-check", cfg.oracle_check,
                    "also evaluate the exact CRLB while k <= 12");
    }

    CLI11_PARSE(app, argc, argv);
    if (cfg.runs <= 0) cfg.runs = app.got_subcommand(run) ? 1 : 500;
    for (auto* c : {run, mc, bench, dp}) {
        if (!c->parsed()) continue;
        cfg.horizon_set = c->get_option("--horizon")->count() > 0;
        cfg.seed_set = c->get_option("--seed")->count() > 0;
    }

    try {
        if (app.got_subcommand(run)) {
            crlbpf::experiments::cmd_run(cfg);
            std::printf("wrote %s/run.csv\n", cfg.output_dir.c_str());
        } else if (app.got_subcommand(mc)) {
            auto rows = crlbpf::experiments::cmd_mc(cfg);
            for (const auto& r : rows)
                std::printf("gamma=%g mse_x=%.6f mse_d=%.6f\n", r.gamma, r.mse_x, r.mse_d);
            std::printf("wrote %s/mc.csv\n", cfg.output_dir.c_str());
        } else if (app.got_subcommand(bench)) {
            auto rows = crlbpf::experiments::cmd_bench(cfg);
            for (const auto& r : rows)
                std::printf("k=%d path=%s wall_ns=%lld\n", r.k, r.path.c_str(),
                            static_cast<long long>(r.wall_ns));
            std::printf("wrote %s/bench.csv\n", cfg.output_dir.c_str());
        } else if (app.got_subcommand(dp)) {
            crlbpf::experiments::cmd_dp_curve(cfg);
            std::printf("wrote %s/dp.csv\n", cfg.output_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
