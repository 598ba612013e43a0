#pragma once

#include <string>
#include <vector>

#include "crlbpf/pipeline.hpp"
#include "crlbpf/threat.hpp"

namespace crlbpf::experiments {

struct ExperimentConfig {
    std::string scenario = "two_dim";  // "building" | "two_dim" | path to a JSON config
    std::vector<double> gammas;        // empty = scenario default
    int window = 0;                    // 0 = scenario default
    double sigma_floor = 1e-4;
    int horizon = 50;
    int runs = 500;
    std::uint64_t master_seed = 1;
    std::vector<double> epsilon_grid = {0.1, 0.5, 1.0, 2.0};
    std::string output_dir = ".";
    int threads = 0;  // 0 = hardware concurrency
    bool oracle_check = false;
    // a JSON scenario's horizon/seed apply unless these say the command line
    // already set them
    bool horizon_set = false;
    bool seed_set = false;
};

struct ResolvedScenario {
    SystemModel model;
    InputSignal input;
    double default_gamma = 0.0;
    int default_window = 2;
    int horizon = 50;                // effective, after config-file resolution
    std::uint64_t master_seed = 1;   // effective, after config-file resolution
};

// "building", "two_dim", or a path to a JSON scenario file (see README for
// the schema). Random inputs are seeded deterministically from the master
// seed so Monte Carlo runs share one input sequence.
ResolvedScenario resolve_scenario(const ExperimentConfig& cfg);

// Per-step detail file <out>/run.csv: truth, measurement, UMV and private
// estimates, adversary inference, trace PB and trace Sigma.
void cmd_run(const ExperimentConfig& cfg);

struct McRow {
    double gamma = 0.0;
    double mse_x = 0.0;
    double mse_d = 0.0;
    int runs = 0;
    int horizon = 0;
};

// Averaged MSEs of the published estimate and the adversary's input estimate
// over `runs` runs and steps 1..horizon, one row per gamma; written to
// <out>/mc.csv.
std::vector<McRow> cmd_mc(const ExperimentConfig& cfg);

struct BenchRow {
    int k = 0;
    std::string path;  // "oracle" or "pcrlb"
    std::int64_t wall_ns = 0;
    double flop_est = 0.0;
};

// Wall-clock scaling of the exact oracle path versus the windowed PCRLB
// path; written to <out>/bench.csv. The flop estimates follow the operation
// counts of the two closed forms.
std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg);

struct DpRow {
    double gamma = 0.0;
    double epsilon = 0.0;
    double delta = 0.0;
    double sensitivity = 0.0;
};

// (gamma, epsilon) -> delta at the final designed step; written to
// <out>/dp.csv.
std::vector<DpRow> cmd_dp_curve(const ExperimentConfig& cfg);

// Operation-count polynomials for the two paths.
double crlb_flops(int k, int dim_x, int dim_d, int window);
double pcrlb_flops(int dim_x, int dim_d, int window);

}  // namespace crlbpf::experiments
