#include "crlbpf/pipeline.hpp"

#include <stdexcept>

namespace crlbpf {

Planner::Planner(SystemModel model, PrivacyConfig cfg)
    : model_(std::move(model)), cfg_(std::move(cfg)) {
    if (cfg_.window < 2) throw std::invalid_argument("Planner: window must be >= 2");
    if (cfg_.gamma < 0.0) throw std::invalid_argument("Planner: gamma must be >= 0");
    if (cfg_.sigma_floor <= 0.0) throw std::invalid_argument("Planner: sigma_floor must be > 0");
}

StepPlan Planner::advance() {
    const int k = ++k_;
    StepPlan plan;
    plan.k = k;

    Matrix s_pred;
    if (k == 0) {
        s_pred = model_.P0;
    } else {
        const Matrix f = model_.F(k - 1);
        s_pred = symmetrized(f * s_umv_ * f.transpose() + model_.Q(k - 1));
    }
    umv::GainResult g = umv::gain(s_pred, model_, k);
    plan.K = g.K;
    s_umv_ = umv::covariance_update(s_pred, model_, k);
    plan.S_umv = s_umv_;

    gains_.push_back(plan.K);
    umv::trim_gain_history(gains_, cfg_.window);
    if (cfg_.oracle_check) all_gains_.push_back(plan.K);

    if (k == 0) {
        mw_.emplace(model_, plan.K, cfg_.window);
    } else {
        mw_->step(model_, plan.K);
    }

    if (mw_->full() && cfg_.gamma > 0.0) {
        const crlb::TildeL tl = crlb::build_tilde_L(model_, gains_, k);
        noise::NoiseDesign d =
            noise::design_noise(mw_->partition(), tl, model_.G(k - 1), cfg_.gamma,
                                cfg_.sigma_floor);
        plan.Sigma = d.sigma;
        plan.designed = true;
        plan.trace_pcrlb = d.trace_pcrlb;
    } else {
        // warm-up, or gamma == 0 (design skipped entirely)
        plan.Sigma = cfg_.sigma_floor * Matrix::Identity(model_.dim_x, model_.dim_x);
    }
    mw_->record_sigma(plan.Sigma);
    if (cfg_.oracle_check) {
        all_sigmas_.push_back(plan.Sigma);
        // The exact CRLB exists only while the window can identify the whole
        // input history: k dim_d <= N_s dim_x and (k-1) dim_d <= (N_s-1) dim_x.
        const int ns = cfg_.window;
        const bool identifiable = k * model_.dim_d <= ns * model_.dim_x &&
                                  (k - 1) * model_.dim_d <= (ns - 1) * model_.dim_x;
        if (mw_->full() && k <= cfg_.k_max_oracle && identifiable) {
            std::vector<Matrix> window_sigmas(all_sigmas_.end() - ns, all_sigmas_.end());
            try {
                plan.trace_crlb = crlb::crlb_oracle(model_, all_gains_, window_sigmas, k, ns,
                                                    cfg_.k_max_oracle)
                                      .trace;
            } catch (const IllConditionedError&) {
                // near the identifiability boundary the Fisher matrix can be
                // numerically singular; the cross check is skipped then
            }
        }
    }
    return plan;
}

Vector umv_apply(const SystemModel& model, const StepPlan& plan, const Vector& x_hat_prev,
                 const Vector& y) {
    Vector x_pred;
    if (plan.k == 0) {
        x_pred = model.x0_mean;
    } else {
        x_pred = model.F(plan.k - 1) * x_hat_prev;
    }
    return x_pred + plan.K * (y - model.H(plan.k) * x_pred);
}

Pipeline::Pipeline(SystemModel model, PrivacyConfig cfg)
    : planner_(std::move(model), cfg), rng_(derive_seed(cfg.seed, 0x616c706861ULL)) {}

StepOutput Pipeline::step(const Vector& y) {
    const StepPlan plan = planner_.advance();
    const SystemModel& model = planner_.model();
    x_umv_ = umv_apply(model, plan, x_umv_, y);

    StepOutput out;
    out.k = plan.k;
    out.x_hat_umv = x_umv_;
    out.Sigma_k = plan.Sigma;
    out.S_hat = plan.S_umv + plan.Sigma;
    out.trace_pcrlb = plan.designed ? plan.trace_pcrlb : 0.0;
    out.trace_crlb = plan.trace_crlb;
    out.x_hat = x_umv_ + psd_sqrt(plan.Sigma) * rng_.normal_vector(model.dim_x);
    return out;
}

PipelineRun run_pipeline(const SystemModel& model, const InputSignal& input, int horizon,
                         const PrivacyConfig& cfg) {
    PipelineRun run;
    run.trajectory = simulate(model, input, horizon, derive_seed(cfg.seed, 0x73696dULL));
    Pipeline pipe(model, cfg);
    run.steps.reserve(horizon + 1);
    for (int k = 0; k <= horizon; ++k) run.steps.push_back(pipe.step(run.trajectory.measurements[k]));
    return run;
}

std::vector<StepPlan> plan_schedule(const SystemModel& model, const PrivacyConfig& cfg,
                                    int horizon) {
    Planner planner(model, cfg);
    std::vector<StepPlan> plans;
    plans.reserve(horizon + 1);
    for (int k = 0; k <= horizon; ++k) plans.push_back(planner.advance());
    return plans;
}

}  // namespace crlbpf
