#pragma once

#include <deque>
#include <vector>

#include "crlbpf/system_model.hpp"

namespace crlbpf {

/// Sliding-window second moments of the state and the UMV estimate, advanced
/// recursively so memory and per-step cost are independent of the time step.
///
/// Tracked at the current step k:
///   cov_xx       = Cov(x_k, x_k)
///   cov_xhat     = Cov(x_k, xhat_k)
///   cov_hathat   = Cov(xhat_k, xhat_k)
///   lag entries  = Cov(xhat_k, xhat_{k-j}) and Cov(x_k, xhat_{k-j}), j = 1..N_s-1
/// plus the frozen per-time blocks needed to assemble the window joint
/// covariance of (xhat_{k'}, ..., xhat_k), k' = k - N_s + 1.
class MomentWindow {
public:
    MomentWindow(const SystemModel& model, const Matrix& K0, int window);

    // Advances every block one step using the gain K_k of step k = current_step() + 1.
    void step(const SystemModel& model, const Matrix& K_k);

    // Records the perturbation covariance published at the current step.
    void record_sigma(Matrix sigma);

    int current_step() const { return k_; }
    int window() const { return ns_; }
    bool full() const { return k_ >= ns_ - 1; }

    const Matrix& cov_xx() const { return cov_xx_; }
    const Matrix& cov_xhat() const { return cov_xhat_; }
    const Matrix& cov_hathat() const { return cov_hh_; }
    const std::deque<Matrix>& sigma_history() const { return sigma_hist_; }

    /// Blocks of the window joint covariance partitioned for the noise design:
    ///   past_priv  = published covariance of (xhat_{k'} .. xhat_{k-1}),
    ///                i.e. UMV blocks plus blkdiag of the recorded sigmas
    ///   cross_umv  = Cov(xhat_k, (xhat_{k'} .. xhat_{k-1}))
    ///   corner_umv = Cov(xhat_k, xhat_k)
    struct Partition {
        Matrix past_priv;
        Matrix cross_umv;
        Matrix corner_umv;
    };
    // Valid once full(); requires sigmas recorded through step k-1.
    Partition partition() const;

    struct Joint {
        Matrix p_umv;   // Cov of stacked (xhat_{k'} .. xhat_k), UMV part
        Matrix p_priv;  // p_umv + blkdiag(Sigma_{k'} .. Sigma_k)
    };
    // Valid once full(); requires sigmas recorded through step k.
    Joint assemble() const;

private:
    Matrix assemble_umv() const;

    int ns_;
    int k_ = 0;
    int dx_;
    Matrix cov_xx_, cov_xhat_, cov_hh_;
    std::vector<Matrix> x_cross_, hat_cross_;    // lag j-1 at index j-1
    std::deque<Matrix> diag_hist_;               // window diagonal blocks, oldest first
    std::deque<std::vector<Matrix>> rows_;       // per window time: its lag blocks
    std::deque<Matrix> sigma_hist_;              // oldest first
    int last_sigma_k_ = -1;
};

}  // namespace crlbpf
