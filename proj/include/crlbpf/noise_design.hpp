#pragma once

#include "crlbpf/crlb.hpp"
#include "crlbpf/moment_window.hpp"

namespace crlbpf::noise {

/// Decomposition G = U [diag(upsilon); 0] V with U, V orthogonal and the
/// singular values in non-increasing order.
struct GSvd {
    Matrix U;        // dim_x x dim_x
    Vector upsilon;  // dim_d positive singular values
    Matrix V;        // dim_d x dim_d
};

// Throws when G is not full column rank.
GSvd svd_G(const Matrix& G_prev);

/// Blocks of M = U^T (A_tilde + sigma I) U; a11 is the leading
/// dim_d x dim_d block. a12/a21/a22 are empty when dim_x == dim_d.
struct MPartition {
    Matrix a11, a12, a21, a22;
};

MPartition partition_M(const Matrix& a_tilde, double sigma_floor, const Matrix& U, int dim_d);

struct SdpSolution {
    Matrix sigma11;  // minimizer, sigma11 >= a11
    bool active = false;  // whether the trace constraint binds
};

// Closed-form minimizer of
//   min trace(S)  s.t.  trace(Ups^{-2} (S - a12 a22^{-1} a21)) >= gamma, S >= a11.
// Writing S = a11 + Y, the problem is min trace(Y) s.t. trace(W Y) >= c', Y >= 0
// with diagonal W = Ups^{-2}; the extremal Y is rank one along the largest
// weight, so S = a11 + (c'/w_max) e_j e_j^T when the constraint binds.
// Ties in w_max go to the smallest index.
SdpSolution solve_sdp(const MPartition& parts, const Vector& upsilon, double gamma);

// Sigma_k = U blkdiag(sigma11 - a11 + sigma I_d, sigma I_{dx-d}) U^T.
Matrix assemble_sigma(const Matrix& sigma11_star, const Matrix& a11, double sigma_floor,
                      const Matrix& U);

struct NoiseDesign {
    Matrix sigma;         // designed perturbation covariance, >= sigma_floor I
    Matrix a_tilde;
    GSvd svd;
    MPartition parts;
    Matrix sigma11_star;
    bool active = false;
    double trace_pcrlb = 0.0;  // trace PB at the designed sigma
};

// Full design chain for one step: A-tilde from the window blocks, SVD of G,
// partition, SDP, reconstruction. gamma = 0 skips the design and returns the
// sigma I floor.
NoiseDesign design_noise(const MomentWindow::Partition& window, const crlb::TildeL& tl,
                         const Matrix& G_prev, double gamma, double sigma_floor);

}  // namespace crlbpf::noise
