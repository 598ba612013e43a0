#include "crlbpf/threat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crlbpf::threat {

InputEstimate infer_input(const Vector& x_hat_k, const Vector& x_hat_km1, const Matrix& F_prev,
                          const Matrix& G_prev) {
    const Matrix gtg = symmetrized(G_prev.transpose() * G_prev);
    Matrix rhs = G_prev.transpose() * (x_hat_k - F_prev * x_hat_km1);
    Vector d;
    try {
        d = spd_solve(gtg, rhs, "infer_input: G^T G");
    } catch (const IllConditionedError&) {
        throw std::invalid_argument("infer_input: G is rank deficient");
    }
    InputEstimate e;
    e.d_hat = d;
    e.d_hat_rounded.resize(d.size());
    for (Eigen::Index i = 0; i < d.size(); ++i)
        e.d_hat_rounded(i) = static_cast<int>(std::round(d(i)));
    return e;
}

std::vector<double> adversary_mse(const std::vector<std::vector<Vector>>& published,
                                  const std::vector<Vector>& d_true, const SystemModel& model) {
    if (published.empty() || published.front().size() < 2)
        throw std::invalid_argument("adversary_mse: need at least two estimates per run");
    const std::size_t steps = published.front().size();
    std::vector<double> mse(steps - 1, 0.0);
    for (const auto& run : published) {
        for (std::size_t k = 1; k < steps; ++k) {
            const InputEstimate e =
                infer_input(run[k], run[k - 1], model.F(static_cast<int>(k) - 1),
                            model.G(static_cast<int>(k) - 1));
            mse[k - 1] += (e.d_hat - d_true[k - 1]).squaredNorm();
        }
    }
    for (double& v : mse) v /= static_cast<double>(published.size());
    return mse;
}

double q_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double sensitivity(const Matrix& K_k, const Matrix& H_k, const Matrix& G_prev,
                   const Matrix& P_hat_k, double rho) {
    if (rho < 0.0) throw std::invalid_argument("sensitivity: rho must be >= 0");
    if (rho == 0.0) return 0.0;
    const Matrix w = spd_inv_sqrt(P_hat_k, "sensitivity: published covariance") * K_k * H_k *
                     G_prev;
    Eigen::JacobiSVD<Matrix> svd(w);
    return rho * svd.singularValues()(0);
}

DpReport dp_delta(double epsilon, double delta_q, double adjacency_radius) {
    if (epsilon < 0.0) throw std::invalid_argument("dp_delta: epsilon must be >= 0");
    if (delta_q < 0.0) throw std::invalid_argument("dp_delta: sensitivity must be >= 0");
    DpReport r;
    r.epsilon = epsilon;
    r.sensitivity = delta_q;
    r.adjacency_radius = adjacency_radius;
    if (delta_q == 0.0) {
        r.xi = std::numeric_limits<double>::infinity();
        r.delta = 0.0;
        return r;
    }
    r.xi = -0.5 * delta_q + epsilon / delta_q;
    r.delta = q_tail(r.xi);
    return r;
}

}  // namespace crlbpf::threat
