#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "crlbpf/linalg.hpp"

namespace crlbpf {

/// Linear time-varying Gaussian system
///   x_k = F(k-1) x_{k-1} + G(k-1) d_{k-1} + w_{k-1},   w ~ N(0, Q(k-1))
///   y_k = H(k) x_k + v_k,                              v ~ N(0, R(k))
/// with Gaussian prior x_0 ~ N(x0_mean, P0). Immutable after construction.
struct SystemModel {
    int dim_x = 0;
    int dim_y = 0;
    int dim_d = 0;
    std::function<Matrix(int)> F;  // dim_x x dim_x
    std::function<Matrix(int)> G;  // dim_x x dim_d
    std::function<Matrix(int)> H;  // dim_y x dim_x
    std::function<Matrix(int)> Q;  // dim_x x dim_x, PSD
    std::function<Matrix(int)> R;  // dim_y x dim_y, PD
    Vector x0_mean;
    Matrix P0;

    static SystemModel constant(const Matrix& F, const Matrix& G, const Matrix& H,
                                const Matrix& Q, const Matrix& R, const Vector& x0_mean,
                                const Matrix& P0);
};

struct Trajectory {
    std::vector<Vector> states;        // x_0 .. x_K
    std::vector<Vector> measurements;  // y_0 .. y_K
    std::vector<Vector> inputs;        // d_0 .. d_{K-1}
};

/// Exogenous-input generator: a pure mapping k -> d_k. The "uniform" kind is
/// counter-based, so the sequence is a deterministic function of its seed and
/// stays fixed across Monte Carlo runs.
class InputSignal {
public:
    static InputSignal formula(int dim, std::function<Vector(int)> fn);
    static InputSignal uniform(int dim, double lo, double hi, std::uint64_t seed);
    static InputSignal constant(Vector value);
    // building-occupancy style: d_k = round(scale * cos(k + 1) + offset)
    static InputSignal cosine_round(double scale, double offset);

    Vector operator()(int k) const { return fn_(k); }
    int dim() const { return dim_; }

private:
    InputSignal(int dim, std::function<Vector(int)> fn) : dim_(dim), fn_(std::move(fn)) {}
    int dim_;
    std::function<Vector(int)> fn_;
};

struct ValidationIssue {
    int k = -1;  // -1 for horizon-independent issues
    std::string what;
};
using ValidationReport = std::vector<ValidationIssue>;

// Checks rank(H(k+1) G(k)) = rank(G(k)) = dim_d for every k in the horizon,
// definiteness of Q, R, P0, and the dimension constraints. Failures are
// reported, not thrown.
ValidationReport validate_model(const SystemModel& model, int horizon);

// Draws x_0 from the prior (exactly x0_mean when noise_free) and rolls the
// system forward. Identical seeds give bit-identical trajectories.
Trajectory simulate(const SystemModel& model, const InputSignal& input, int horizon,
                    std::uint64_t seed, bool noise_free = false);

// CO2/occupancy example: a = 0.75, b = 1.75, Q = 0.1, R = 0.05,
// prior mean and variance 0.01, d_{k-1} = round(0.5 cos(k) + 5).
std::pair<SystemModel, InputSignal> building_occupancy_scenario();

// Two-dimensional example: F = [[1,1],[0,1]], G = (0.5, 0.5)^T, H = I,
// Q = 2I, R = I, x0 ~ N((2,2)^T, 0.1 I), d_k iid uniform on [0, 5].
std::pair<SystemModel, InputSignal> two_dim_scenario(std::uint64_t input_seed = 0x2d5ce5ULL);

}  // namespace crlbpf
