#pragma once

// Test-side oracles: random well-posed instances, the finite-difference
// Fisher construction, and naive re-derivations kept independent of the
// library's solve paths.

#include <vector>

#include "crlbpf/crlb.hpp"
#include "crlbpf/rng.hpp"
#include "crlbpf/system_model.hpp"
#include "crlbpf/umv_filter.hpp"

namespace crlbpf::testing {

inline int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
}

inline Matrix random_matrix(Rng& rng, int r, int c, double scale = 1.0) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = scale * rng.uniform(-1.0, 1.0);
    return m;
}

inline Matrix random_psd(Rng& rng, int n, double scale = 1.0) {
    const Matrix a = random_matrix(rng, n, n, scale);
    return symmetrized(a * a.transpose());
}

inline Matrix random_spd(Rng& rng, int n, double scale = 1.0) {
    return random_psd(rng, n, scale) + 0.1 * scale * Matrix::Identity(n, n);
}

// UMV gain schedule K_0..K_k.
inline std::vector<Matrix> gains_up_to(const SystemModel& model, int k) {
    std::vector<Matrix> gains;
    Matrix s_umv;
    for (int t = 0; t <= k; ++t) {
        const Matrix s_pred =
            (t == 0) ? model.P0
                     : symmetrized(model.F(t - 1) * s_umv * model.F(t - 1).transpose() +
                                   model.Q(t - 1));
        gains.push_back(umv::gain(s_pred, model, t).K);
        s_umv = umv::covariance_update(s_pred, model, t);
    }
    return gains;
}

struct OracleInstance {
    SystemModel model;
    int ns = 2;
    int k = 2;
    std::vector<Matrix> gains;   // K_0..K_k
    std::vector<Matrix> sigmas;  // window Sigma_{k'}..Sigma_k
};

// Random system plus (ns, k) sized so the Fisher matrix and the L11 normal
// matrix stay full rank: k*dd <= ns*dx and (k-1)*dd <= (ns-1)*dx.
inline OracleInstance random_oracle_instance(Rng& rng, int max_dx = 4, int max_dd = 2,
                                             int max_ns = 4, int max_k = 8) {
    for (;;) {
        const int dx = uniform_int(rng, 1, max_dx);
        const int dd = uniform_int(rng, 1, std::min(dx, max_dd));
        const int dy = uniform_int(rng, dd, std::max(dd, max_dx));
        const int ns = uniform_int(rng, 2, max_ns);
        const int k = uniform_int(rng, ns, max_k);
        if (k * dd > ns * dx || (k - 1) * dd > (ns - 1) * dx) continue;

        // spectrally stable F keeps the window magnitudes O(1), which the
        // absolute 1e-8 agreement tolerances presuppose
        Matrix F = random_matrix(rng, dx, dx);
        double rho = 0.0;
        for (int i = 0; i < dx; ++i) rho = std::max(rho, std::abs(F.eigenvalues()(i)));
        if (rho > 0.0) F *= rng.uniform(0.3, 0.95) / rho;
        const Matrix G = random_matrix(rng, dx, dd);
        const Matrix H = random_matrix(rng, dy, dx);
        if (numeric_rank(G) != dd || numeric_rank(H * G) != dd) continue;
        OracleInstance inst;
        inst.model = SystemModel::constant(F, G, H, random_spd(rng, dx), random_spd(rng, dy),
                                           random_matrix(rng, dx, 1).col(0),
                                           0.5 * Matrix::Identity(dx, dx));
        inst.ns = ns;
        inst.k = k;
        try {
            inst.gains = gains_up_to(inst.model, k);
            for (int i = 0; i < ns; ++i)
                inst.sigmas.push_back(random_psd(rng, dx, 0.4) +
                                      1e-3 * Matrix::Identity(dx, dx));
            // reject instances too ill conditioned for the 1e-8 tolerances
            const Matrix fisher =
                crlb::fisher_oracle(inst.model, inst.gains, inst.sigmas, k, ns, max_k);
            Eigen::SelfAdjointEigenSolver<Matrix> es(fisher, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() <= 0.0 ||
                es.eigenvalues().maxCoeff() > 1e6 * es.eigenvalues().minCoeff())
                continue;
            const crlb::BatchOracle batch = crlb::build_batch(inst.model, inst.gains, k, ns,
                                                              max_k);
            Matrix window = batch.p_umv;
            for (int i = 0; i < ns; ++i)
                window.block(i * dx, i * dx, dx, dx) += inst.sigmas[i];
            Eigen::SelfAdjointEigenSolver<Matrix> ew(window, Eigen::EigenvaluesOnly);
            if (ew.eigenvalues().minCoeff() <= 0.0 ||
                ew.eigenvalues().maxCoeff() > 1e6 * ew.eigenvalues().minCoeff())
                continue;
            crlb::crlb_oracle(inst.model, inst.gains, inst.sigmas, k, ns, max_k);
        } catch (const std::exception&) {
            continue;
        }
        return inst;
    }
}

// Mean of the stacked window estimates as a function of the input sequence:
// the zero-noise filter pass, linear in d.
inline Vector window_mean(const SystemModel& model, const std::vector<Matrix>& gains,
                          const std::vector<Vector>& d_seq, int k, int ns) {
    Vector x = model.x0_mean;
    Vector xh;
    std::vector<Vector> hats;
    for (int t = 0; t <= k; ++t) {
        if (t > 0) x = model.F(t - 1) * x + model.G(t - 1) * d_seq[t - 1];
        const Vector y = model.H(t) * x;
        if (t == 0) {
            xh = model.x0_mean + gains[0] * (y - model.H(0) * model.x0_mean);
        } else {
            const Vector xp = model.F(t - 1) * xh;
            xh = xp + gains[t] * (y - model.H(t) * xp);
        }
        hats.push_back(xh);
    }
    const int dx = model.dim_x;
    Vector stacked(ns * dx);
    for (int i = 0; i < ns; ++i) stacked.segment(i * dx, dx) = hats[k - ns + 1 + i];
    return stacked;
}

// Central finite differences of window_mean in every input coordinate.
inline Matrix fd_mean_jacobian(const SystemModel& model, const std::vector<Matrix>& gains,
                               const std::vector<Vector>& d_base, int k, int ns,
                               double step = 1e-5) {
    const int dd = model.dim_d;
    Matrix jac(ns * model.dim_x, k * dd);
    for (int j = 0; j < k; ++j) {
        for (int c = 0; c < dd; ++c) {
            std::vector<Vector> dp = d_base, dm = d_base;
            dp[j](c) += step;
            dm[j](c) -= step;
            jac.col(j * dd + c) = (window_mean(model, gains, dp, k, ns) -
                                   window_mean(model, gains, dm, k, ns)) /
                                  (2.0 * step);
        }
    }
    return jac;
}

// Naive A-matrix evaluation with explicit inverses; mirrors the closed form
// without sharing the library's factorization helpers.
inline Matrix naive_a_matrix(const Matrix& past, const Matrix& cross, const Matrix& corner,
                             const Matrix& l11, const Matrix& l21) {
    const Matrix pinv = past.inverse();
    const Matrix schur = corner - cross * pinv * cross.transpose();
    const Matrix t = l21 - cross * pinv * l11;
    return schur + t * (l11.transpose() * pinv * l11).inverse() * t.transpose();
}

}  // namespace crlbpf::testing
