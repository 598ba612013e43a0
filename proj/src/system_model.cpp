#include "crlbpf/system_model.hpp"

#include <cmath>
#include <stdexcept>

#include "crlbpf/rng.hpp"

namespace crlbpf {

SystemModel SystemModel::constant(const Matrix& F, const Matrix& G, const Matrix& H,
                                  const Matrix& Q, const Matrix& R, const Vector& x0_mean,
                                  const Matrix& P0) {
    SystemModel m;
    m.dim_x = static_cast<int>(F.rows());
    m.dim_d = static_cast<int>(G.cols());
    m.dim_y = static_cast<int>(H.rows());
    if (F.cols() != m.dim_x || G.rows() != m.dim_x || H.cols() != m.dim_x ||
        Q.rows() != m.dim_x || Q.cols() != m.dim_x || R.rows() != m.dim_y ||
        R.cols() != m.dim_y || x0_mean.size() != m.dim_x || P0.rows() != m.dim_x ||
        P0.cols() != m.dim_x)
        throw std::invalid_argument("SystemModel::constant: inconsistent dimensions");
    m.F = [F](int) { return F; };
    m.G = [G](int) { return G; };
    m.H = [H](int) { return H; };
    m.Q = [Q](int) { return Q; };
    m.R = [R](int) { return R; };
    m.x0_mean = x0_mean;
    m.P0 = P0;
    return m;
}

InputSignal InputSignal::formula(int dim, std::function<Vector(int)> fn) {
    return InputSignal(dim, std::move(fn));
}

InputSignal InputSignal::uniform(int dim, double lo, double hi, std::uint64_t seed) {
    return InputSignal(dim, [=](int k) {
        Vector d(dim);
        for (int i = 0; i < dim; ++i) {
            const std::uint64_t h = splitmix64(
                seed ^ splitmix64(static_cast<std::uint64_t>(k) * dim + i + 1));
            d(i) = lo + (hi - lo) * (static_cast<double>(h >> 11) * 0x1.0p-53);
        }
        return d;
    });
}

InputSignal InputSignal::constant(Vector value) {
    const int dim = static_cast<int>(value.size());
    return InputSignal(dim, [v = std::move(value)](int) { return v; });
}

InputSignal InputSignal::cosine_round(double scale, double offset) {
    return InputSignal(1, [=](int k) {
        Vector d(1);
        d(0) = std::round(scale * std::cos(static_cast<double>(k + 1)) + offset);
        return d;
    });
}

ValidationReport validate_model(const SystemModel& model, int horizon) {
    ValidationReport report;
    auto global = [&](const std::string& what) { report.push_back({-1, what}); };
    if (model.dim_x < model.dim_d) global("dim_x < dim_d");
    if (model.dim_y < model.dim_d) global("dim_y < dim_d");
    if (min_eigenvalue(model.P0) < -1e-10) global("P0 not positive semi-definite");

    for (int k = 0; k <= horizon; ++k) {
        if (min_eigenvalue(model.Q(k)) < -1e-10)
            report.push_back({k, "Q(k) not positive semi-definite"});
        if (min_eigenvalue(model.R(k)) <= 0.0)
            report.push_back({k, "R(k) not positive definite"});
        if (k >= horizon) break;
        const Matrix g = model.G(k);
        const int rg = numeric_rank(g);
        if (rg != model.dim_d)
            report.push_back({k, "rank(G(k)) = " + std::to_string(rg) + " != dim_d"});
        const int rhg = numeric_rank(model.H(k + 1) * g);
        if (rhg != model.dim_d)
            report.push_back({k, "rank(H(k+1) G(k)) = " + std::to_string(rhg) + " != dim_d"});
    }
    return report;
}

Trajectory simulate(const SystemModel& model, const InputSignal& input, int horizon,
                    std::uint64_t seed, bool noise_free) {
    if (input.dim() != model.dim_d)
        throw std::invalid_argument("simulate: input dimension != dim_d");
    Rng rng(seed);
    Trajectory traj;
    traj.states.reserve(horizon + 1);
    traj.measurements.reserve(horizon + 1);
    traj.inputs.reserve(horizon);

    Vector x = model.x0_mean;
    if (!noise_free) x += psd_sqrt(model.P0) * rng.normal_vector(model.dim_x);
    traj.states.push_back(x);
    {
        Vector y = model.H(0) * x;
        if (!noise_free) y += psd_sqrt(model.R(0)) * rng.normal_vector(model.dim_y);
        traj.measurements.push_back(y);
    }
    for (int k = 1; k <= horizon; ++k) {
        const Vector d = input(k - 1);
        if (d.size() != model.dim_d)
            throw std::invalid_argument("simulate: input generator output has wrong dimension");
        traj.inputs.push_back(d);
        x = model.F(k - 1) * x + model.G(k - 1) * d;
        if (!noise_free) x += psd_sqrt(model.Q(k - 1)) * rng.normal_vector(model.dim_x);
        traj.states.push_back(x);
        Vector y = model.H(k) * x;
        if (!noise_free) y += psd_sqrt(model.R(k)) * rng.normal_vector(model.dim_y);
        traj.measurements.push_back(y);
    }
    return traj;
}

std::pair<SystemModel, InputSignal> building_occupancy_scenario() {
    const double a = 0.75, b = 1.75;
    Matrix F(1, 1), G(1, 1), H(1, 1), Q(1, 1), R(1, 1), P0(1, 1);
    F << a;
    G << b;
    H << 1.0;
    Q << 0.1;
    R << 0.05;
    P0 << 0.01;
    Vector x0(1);
    x0 << 0.01;
    return {SystemModel::constant(F, G, H, Q, R, x0, P0),
            InputSignal::cosine_round(0.5, 5.0)};
}

std::pair<SystemModel, InputSignal> two_dim_scenario(std::uint64_t input_seed) {
    Matrix F(2, 2);
    F << 1.0, 1.0, 0.0, 1.0;
    Matrix G(2, 1);
    G << 0.5, 0.5;
    const Matrix H = Matrix::Identity(2, 2);
    const Matrix Q = 2.0 * Matrix::Identity(2, 2);
    const Matrix R = Matrix::Identity(2, 2);
    Vector x0(2);
    x0 << 2.0, 2.0;
    const Matrix P0 = 0.1 * Matrix::Identity(2, 2);
    return {SystemModel::constant(F, G, H, Q, R, x0, P0),
            InputSignal::uniform(1, 0.0, 5.0, input_seed)};
}

}  // namespace crlbpf
