#pragma once

#include <deque>

#include "crlbpf/system_model.hpp"

namespace crlbpf::umv {

struct Prediction {
    Vector x_pred;
    Matrix S_pred;  // symmetric PSD
};

struct GainResult {
    Matrix K;  // dim_x x dim_y, satisfies K H G = G
    Matrix C;  // innovation covariance H S_pred H^T + R
};

struct FilterState {
    int k = 0;
    Vector x_hat;
    Matrix S_hat;                     // symmetric PSD
    std::deque<Matrix> gain_history;  // most recent last; trimmed by the caller
};

// Unbiased minimum-variance gain. The constraint K H G = G is enforced by
// construction; a numerically singular G^T H^T C^{-1} H G means Assumption 1
// fails at this step.
// At k = 0 the prior acts as the prediction and G(0) stands in for G(-1).
GainResult gain(const Matrix& S_pred, const SystemModel& model, int k);

// Covariance update of the measurement step, symmetrized.
Matrix covariance_update(const Matrix& S_pred, const SystemModel& model, int k);

// State at k = 0: prior treated as the prediction (S_0^- = P0), then updated
// against y_0 with the k = 0 gain.
FilterState init(const SystemModel& model, const Vector& y0);

Prediction predict(const FilterState& state, const SystemModel& model);

FilterState update(const Prediction& pred, const Vector& y, const SystemModel& model, int k,
                   std::deque<Matrix> gain_history = {});

void trim_gain_history(std::deque<Matrix>& gains, int window);

}  // namespace crlbpf::umv
