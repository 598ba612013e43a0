#pragma once

#include <optional>

#include "crlbpf/noise_design.hpp"
#include "crlbpf/rng.hpp"
#include "crlbpf/umv_filter.hpp"

namespace crlbpf {

struct PrivacyConfig {
    double gamma = 0.0;        // privacy threshold on trace PB
    int window = 2;            // N_s >= 2
    double sigma_floor = 1e-4;
    std::uint64_t seed = 0;
    bool oracle_check = false;  // also evaluate the exact CRLB while k <= k_max_oracle
    int k_max_oracle = 12;
};

/// Published per-step result. x_hat_umv is the internal estimate the
/// perturbation protects; it is retained for evaluation only and never
/// written to external outputs outside evaluation mode.
struct StepOutput {
    int k = 0;
    Vector x_hat;
    Matrix S_hat;      // published covariance S_umv + Sigma
    Matrix Sigma_k;
    double trace_pcrlb = 0.0;  // 0 before the window is full (no design yet)
    std::optional<double> trace_crlb;
    Vector x_hat_umv;
};

/// Deterministic quantities of step k: everything in Algorithm 1 that does
/// not depend on the measurements.
struct StepPlan {
    int k = 0;
    Matrix K;
    Matrix S_umv;
    Matrix Sigma;
    bool designed = false;
    double trace_pcrlb = 0.0;
    std::optional<double> trace_crlb;
};

/// Advances gains, the UMV error covariance, the moment window and the noise
/// design one step at a time. Memory is O(1) in the step count unless
/// oracle_check keeps the full histories for the exact-CRLB cross check.
class Planner {
public:
    Planner(SystemModel model, PrivacyConfig cfg);

    StepPlan advance();
    int current_step() const { return k_; }
    const SystemModel& model() const { return model_; }
    const PrivacyConfig& config() const { return cfg_; }
    const MomentWindow& moments() const { return *mw_; }

private:
    SystemModel model_;
    PrivacyConfig cfg_;
    int k_ = -1;
    Matrix s_umv_;
    std::optional<MomentWindow> mw_;
    std::deque<Matrix> gains_;             // last N_s
    std::vector<Matrix> all_gains_;        // oracle_check only
    std::vector<Matrix> all_sigmas_;       // oracle_check only
};

// Measurement update of the published estimate under a fixed plan.
Vector umv_apply(const SystemModel& model, const StepPlan& plan, const Vector& x_hat_prev,
                 const Vector& y);

/// One pipeline instance: strict step ordering, owns its noise stream.
class Pipeline {
public:
    Pipeline(SystemModel model, PrivacyConfig cfg);

    // Executes Algorithm 1 for the next step against measurement y.
    StepOutput step(const Vector& y);

private:
    Planner planner_;
    Rng rng_;
    Vector x_umv_;
};

struct PipelineRun {
    std::vector<StepOutput> steps;
    Trajectory trajectory;
};

// Simulates the scenario and filters it; deterministic under a fixed seed
// (separate derived streams for the simulation and the perturbation noise).
PipelineRun run_pipeline(const SystemModel& model, const InputSignal& input, int horizon,
                         const PrivacyConfig& cfg);

// The full deterministic schedule up to the horizon, for Monte Carlo reuse.
std::vector<StepPlan> plan_schedule(const SystemModel& model, const PrivacyConfig& cfg,
                                    int horizon);

}  // namespace crlbpf
