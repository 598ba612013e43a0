#pragma once

#include <deque>
#include <vector>

#include "crlbpf/moment_window.hpp"
#include "crlbpf/system_model.hpp"

namespace crlbpf::crlb {

/// Window sensitivity of the stacked estimates (xhat_{k'} .. xhat_k) to the
/// window inputs (d_{k-N_s} .. d_{k-1}); size independent of k.
struct TildeL {
    Matrix full;  // N_s dim_x x N_s dim_d
    Matrix l11;   // (N_s-1) dim_x x (N_s-1) dim_d
    Matrix l21;   // dim_x x (N_s-1) dim_d
};

// gains = K_{k'}, ..., K_k (exactly N_s of them). At k = N_s - 1 the leading
// input block refers to d_{-1}; G(0) stands in, matching the k = 0 gain
// convention.
TildeL build_tilde_L(const SystemModel& model, const std::deque<Matrix>& gains, int k);

// A-tilde of the time-independent PCRLB: Schur complement of the past window
// plus the input-identifiability correction, symmetrized.
// Throws IllConditionedError when the past window covariance is too ill
// conditioned, or when L11^T P^{-1} L11 is singular (the adversary's window
// cannot pin the older inputs).
Matrix pcrlb_A(const MomentWindow::Partition& window, const TildeL& tl);

struct Bound {
    Matrix mat;  // dim_d x dim_d, symmetric positive definite
    double trace = 0.0;
};

// PB = (G^T (Sigma + A)^{-1} G)^{-1}, evaluated exactly.
Bound pcrlb(const Matrix& sigma_k, const Matrix& a_tilde, const Matrix& G_prev);

/// Batch quantities of the small-horizon oracle path: the full sensitivity
/// L_k (window rows x all k input blocks) and the window covariance of the
/// UMV estimates assembled from first principles rather than the recursions.
struct BatchOracle {
    Matrix l_full;  // N_s dim_x x k dim_d
    Matrix p_umv;   // N_s dim_x x N_s dim_x
};

// gains = K_0, ..., K_k. Cost grows as O(k^3); guarded by k_max.
BatchOracle build_batch(const SystemModel& model, const std::vector<Matrix>& gains, int k,
                        int ns, int k_max = 12);

// Fisher information of d_{0:k-1} carried by the published window,
// I = L_k^T Phat^{-1} L_k, with Phat = p_umv + blkdiag(sigmas).
// sigmas are the window perturbation covariances Sigma_{k'} .. Sigma_k.
Matrix fisher_oracle(const SystemModel& model, const std::vector<Matrix>& gains,
                     const std::vector<Matrix>& sigmas, int k, int ns, int k_max = 12);

struct CrlbResult {
    Matrix B;          // dim_d x dim_d CRLB of d_{k-1}
    double trace = 0.0;
    double route_gap = 0.0;  // |closed form - bottom block of I^{-1}|, max abs
};

// Exact CRLB via the closed form (G^T (Sigma_k + A_k)^{-1} G)^{-1}, with the
// inverse-Fisher bottom block evaluated alongside as a cross-check.
CrlbResult crlb_oracle(const SystemModel& model, const std::vector<Matrix>& gains,
                       const std::vector<Matrix>& sigmas, int k, int ns, int k_max = 12);

// PCRLB-vs-CRLB gap from the partitioned Fisher matrix; the bottom-right
// dim_d block of C^{-1} B^T (A - B C^{-1} B^T)^{-1} B C^{-1} where C is the
// trailing ns*dim_d block. Returns zero when the Fisher matrix has no
// leading block (k == ns).
Matrix approximation_error(const Matrix& fisher, int ns, int dim_d);

}  // namespace crlbpf::crlb
