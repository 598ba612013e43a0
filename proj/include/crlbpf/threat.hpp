#pragma once

#include <vector>

#include "crlbpf/system_model.hpp"

namespace crlbpf::threat {

struct InputEstimate {
    Vector d_hat;
    Eigen::VectorXi d_hat_rounded;  // nearest integer, ties away from zero
};

// Least-squares inversion of two consecutive published estimates:
//   d_hat_{k-1} = (G^T G)^{-1} G^T (x_hat_k - F x_hat_{k-1}).
InputEstimate infer_input(const Vector& x_hat_k, const Vector& x_hat_km1, const Matrix& F_prev,
                          const Matrix& G_prev);

// Per-step mean squared error of the adversary's estimate over a Monte Carlo
// batch; published[run][k] are the estimates, d_true the (shared) inputs.
// Entry k-1 of the result covers d_{k-1}, inferred from steps k-1 and k.
std::vector<double> adversary_mse(const std::vector<std::vector<Vector>>& published,
                                  const std::vector<Vector>& d_true, const SystemModel& model);

// Standard normal upper tail Q(x) = P(Z > x), via erfc.
double q_tail(double x);

// Sensitivity of the publishing mechanism under the adjacency relation
// ||d - d'|| <= rho: Delta q = rho * sigma_max(P_hat^{-1/2} K H G).
double sensitivity(const Matrix& K_k, const Matrix& H_k, const Matrix& G_prev,
                   const Matrix& P_hat_k, double rho);

struct DpReport {
    double epsilon = 0.0;
    double delta = 0.0;
    double sensitivity = 0.0;
    double xi = 0.0;
    double adjacency_radius = 1.0;
};

// (epsilon, delta)-DP certificate: xi = -dq/2 + epsilon/dq, delta = Q(xi).
// dq = 0 gives delta = 0.
DpReport dp_delta(double epsilon, double delta_q, double adjacency_radius = 1.0);

}  // namespace crlbpf::threat
