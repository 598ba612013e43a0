#include "crlbpf/umv_filter.hpp"

namespace crlbpf::umv {

GainResult gain(const Matrix& S_pred, const SystemModel& model, int k) {
    const Matrix H = model.H(k);
    const Matrix G = model.G(k > 0 ? k - 1 : 0);
    const Matrix C = symmetrized(H * S_pred * H.transpose() + model.R(k));
    // C^{-1} applied once to both H S_pred^T-free blocks
    const Matrix CiH = spd_solve(C, H, "umv::gain innovation covariance");
    const Matrix SHCi = S_pred * CiH.transpose();       // S H^T C^{-1}
    const Matrix CiHG = CiH * G;                        // C^{-1} H G
    const Matrix M = G.transpose() * H.transpose() * CiHG;
    Matrix Mi_GtHtCi;
    try {
        Mi_GtHtCi = spd_solve(symmetrized(M), (CiHG).transpose(),
                              "umv::gain G^T H^T C^{-1} H G");
    } catch (const IllConditionedError&) {
        throw IllConditionedError(
            "umv::gain: G^T H^T C^{-1} H G numerically singular (Assumption 1 violated) at k=" +
            std::to_string(k));
    }
    GainResult r;
    r.K = SHCi + (G - SHCi * H * G) * Mi_GtHtCi;
    r.C = C;
    return r;
}

Matrix covariance_update(const Matrix& S_pred, const SystemModel& model, int k) {
    const Matrix H = model.H(k);
    const Matrix G = model.G(k > 0 ? k - 1 : 0);
    const Matrix C = symmetrized(H * S_pred * H.transpose() + model.R(k));
    const Matrix CiH = spd_solve(C, H, "umv::covariance_update innovation covariance");
    const Matrix CiHG = CiH * G;
    const Matrix M = symmetrized(G.transpose() * H.transpose() * CiHG);
    const Matrix T = G - S_pred * CiH.transpose() * H * G;
    const Matrix S = S_pred - S_pred * CiH.transpose() * H * S_pred +
                     T * spd_solve(M, T.transpose(), "umv::covariance_update M");
    return symmetrized(S);
}

FilterState init(const SystemModel& model, const Vector& y0) {
    Prediction pred{model.x0_mean, model.P0};
    return update(pred, y0, model, 0);
}

Prediction predict(const FilterState& state, const SystemModel& model) {
    const Matrix F = model.F(state.k);
    Prediction p;
    p.x_pred = F * state.x_hat;
    p.S_pred = symmetrized(F * state.S_hat * F.transpose() + model.Q(state.k));
    return p;
}

FilterState update(const Prediction& pred, const Vector& y, const SystemModel& model, int k,
                   std::deque<Matrix> gain_history) {
    GainResult g = gain(pred.S_pred, model, k);
    FilterState s;
    s.k = k;
    s.x_hat = pred.x_pred + g.K * (y - model.H(k) * pred.x_pred);
    s.S_hat = covariance_update(pred.S_pred, model, k);
    s.gain_history = std::move(gain_history);
    s.gain_history.push_back(std::move(g.K));
    return s;
}

void trim_gain_history(std::deque<Matrix>& gains, int window) {
    while (static_cast<int>(gains.size()) > window) gains.pop_front();
}

}  // namespace crlbpf::umv
