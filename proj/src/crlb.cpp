#include "crlbpf/crlb.hpp"

#include <stdexcept>

namespace crlbpf::crlb {

namespace {

Matrix state_transition_D(const SystemModel& model, const Matrix& K_t, int t) {
    return (Matrix::Identity(model.dim_x, model.dim_x) - K_t * model.H(t)) * model.F(t - 1);
}

// Shared core of the A-matrix in the CRLB/PCRLB closed forms.
Matrix a_matrix(const Matrix& past_priv, const Matrix& cross_umv, const Matrix& corner_umv,
                const Matrix& l11, const Matrix& l21) {
    const Matrix z_cross = spd_solve(past_priv, cross_umv.transpose(), "A: window covariance");
    const Matrix z_l11 = spd_solve(past_priv, l11, "A: window covariance");
    const Matrix schur = corner_umv - cross_umv * z_cross;
    const Matrix t = l21 - cross_umv * z_l11;
    const Matrix mid = symmetrized(l11.transpose() * z_l11);
    Matrix corr;
    try {
        corr = t * spd_solve(mid, t.transpose(), "A: L11^T P^-1 L11");
    } catch (const IllConditionedError&) {
        throw IllConditionedError(
            "A: L11^T P^-1 L11 singular; window cannot identify the older inputs");
    }
    return symmetrized(schur + corr);
}

}  // namespace

TildeL build_tilde_L(const SystemModel& model, const std::deque<Matrix>& gains, int k) {
    const int ns = static_cast<int>(gains.size());
    if (ns < 2) throw std::invalid_argument("build_tilde_L: need at least 2 gains");
    if (k < ns - 1) throw std::invalid_argument("build_tilde_L: insufficient gain history");
    const int kp = k - ns + 1;
    const int dx = model.dim_x, dy = model.dim_y, dd = model.dim_d;

    // L_DK: lower block triangular of D-products times blkdiag of the gains
    Matrix ldk = Matrix::Zero(ns * dx, ns * dy);
    for (int j = 0; j < ns; ++j) {
        Matrix prod = Matrix::Identity(dx, dx);
        for (int i = j; i < ns; ++i) {
            ldk.block(i * dx, j * dy, dx, dy) = prod * gains[j];
            if (i + 1 < ns) prod = state_transition_D(model, gains[i + 1], kp + i + 1) * prod;
        }
    }
    // L_HF: blkdiag(H) times lower block triangular of F-products
    Matrix lhf = Matrix::Zero(ns * dy, ns * dx);
    for (int j = 0; j < ns; ++j) {
        Matrix prod = Matrix::Identity(dx, dx);
        for (int i = j; i < ns; ++i) {
            lhf.block(i * dy, j * dx, dy, dx) = model.H(kp + i) * prod;
            if (i + 1 < ns) prod = model.F(kp + i) * prod;
        }
    }
    Matrix lg = Matrix::Zero(ns * dx, ns * dd);
    for (int j = 0; j < ns; ++j) {
        const int input_step = k - ns + j;  // d_{k-ns} .. d_{k-1}
        lg.block(j * dx, j * dd, dx, dd) = model.G(std::max(input_step, 0));
    }

    TildeL tl;
    tl.full = ldk * lhf * lg;
    tl.l11 = tl.full.topLeftCorner((ns - 1) * dx, (ns - 1) * dd);
    tl.l21 = tl.full.bottomLeftCorner(dx, (ns - 1) * dd);
    return tl;
}

Matrix pcrlb_A(const MomentWindow::Partition& window, const TildeL& tl) {
    return a_matrix(window.past_priv, window.cross_umv, window.corner_umv, tl.l11, tl.l21);
}

Bound pcrlb(const Matrix& sigma_k, const Matrix& a_tilde, const Matrix& G_prev) {
    const Matrix x = spd_solve(symmetrized(sigma_k + a_tilde), G_prev, "pcrlb: Sigma + A");
    const Matrix m = symmetrized(G_prev.transpose() * x);
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success)
        throw IllConditionedError("pcrlb: G^T (Sigma + A)^{-1} G not positive definite");
    Bound b;
    b.mat = symmetrized(llt.solve(Matrix::Identity(m.rows(), m.cols())));
    b.trace = b.mat.trace();
    return b;
}

BatchOracle build_batch(const SystemModel& model, const std::vector<Matrix>& gains, int k,
                        int ns, int k_max) {
    if (k > k_max) throw std::invalid_argument("build_batch: oracle horizon exceeded");
    if (static_cast<int>(gains.size()) < k + 1)
        throw std::invalid_argument("build_batch: need gains K_0..K_k");
    if (k < ns - 1) throw std::invalid_argument("build_batch: window not full");
    const int kp = k - ns + 1;
    const int dx = model.dim_x, dy = model.dim_y, dd = model.dim_d;

    // L_DK over all measurement times: rows = window times k'..k, cols = 0..k
    Matrix ldk = Matrix::Zero(ns * dx, (k + 1) * dy);
    for (int m = 0; m <= k; ++m) {
        Matrix prod = Matrix::Identity(dx, dx);  // prod_{i=m+1}^{t} D_i, built up in t
        for (int t = m; t <= k; ++t) {
            if (t > m) prod = state_transition_D(model, gains[t], t) * prod;
            if (t >= kp) ldk.block((t - kp) * dx, m * dy, dx, dy) = prod * gains[m];
        }
    }
    // L_HF: rows 0..k, cols = inputs d_0..d_{k-1}; H_m prod_{i=j+1}^{m-1} F_i
    Matrix lhf = Matrix::Zero((k + 1) * dy, k * dx);
    for (int j = 0; j < k; ++j) {
        Matrix prod = Matrix::Identity(dx, dx);
        for (int m = j + 1; m <= k; ++m) {
            if (m > j + 1) prod = model.F(m - 1) * prod;
            lhf.block(m * dy, j * dx, dy, dx) = model.H(m) * prod;
        }
    }
    Matrix lg = Matrix::Zero(k * dx, k * dd);
    for (int j = 0; j < k; ++j) lg.block(j * dx, j * dd, dx, dd) = model.G(j);

    // P_{0:k} = L_F blkdiag(P0, Q_0..Q_{k-1}) L_F^T
    Matrix lf = Matrix::Zero((k + 1) * dx, (k + 1) * dx);
    for (int j = 0; j <= k; ++j) {
        Matrix prod = Matrix::Identity(dx, dx);
        for (int m = j; m <= k; ++m) {
            if (m > j) prod = model.F(m - 1) * prod;
            lf.block(m * dx, j * dx, dx, dx) = prod;
        }
    }
    Matrix noise = Matrix::Zero((k + 1) * dx, (k + 1) * dx);
    noise.topLeftCorner(dx, dx) = model.P0;
    for (int j = 0; j < k; ++j) noise.block((j + 1) * dx, (j + 1) * dx, dx, dx) = model.Q(j);
    const Matrix p0k = lf * noise * lf.transpose();

    Matrix inner = Matrix::Zero((k + 1) * dy, (k + 1) * dy);
    for (int m = 0; m <= k; ++m) {
        inner.block(m * dy, m * dy, dy, dy) = model.R(m);
        for (int j = 0; j <= k; ++j)
            inner.block(m * dy, j * dy, dy, dy) +=
                model.H(m) * p0k.block(m * dx, j * dx, dx, dx) * model.H(j).transpose();
    }

    BatchOracle out;
    out.l_full = ldk * lhf * lg;
    out.p_umv = symmetrized(ldk * inner * ldk.transpose());
    return out;
}

namespace {

Matrix published_window_cov(const Matrix& p_umv, const std::vector<Matrix>& sigmas, int ns,
                            int dx) {
    if (static_cast<int>(sigmas.size()) != ns)
        throw std::invalid_argument("oracle: need the N_s window sigmas");
    Matrix p = p_umv;
    for (int i = 0; i < ns; ++i) p.block(i * dx, i * dx, dx, dx) += sigmas[i];
    return p;
}

}  // namespace

Matrix fisher_oracle(const SystemModel& model, const std::vector<Matrix>& gains,
                     const std::vector<Matrix>& sigmas, int k, int ns, int k_max) {
    const BatchOracle b = build_batch(model, gains, k, ns, k_max);
    const Matrix p = published_window_cov(b.p_umv, sigmas, ns, model.dim_x);
    const Matrix pil = spd_solve(p, b.l_full, "fisher_oracle: window covariance");
    return symmetrized(b.l_full.transpose() * pil);
}

CrlbResult crlb_oracle(const SystemModel& model, const std::vector<Matrix>& gains,
                       const std::vector<Matrix>& sigmas, int k, int ns, int k_max) {
    const int dx = model.dim_x, dd = model.dim_d;
    const BatchOracle b = build_batch(model, gains, k, ns, k_max);
    const Matrix p = published_window_cov(b.p_umv, sigmas, ns, dx);

    // route 1: closed form with A_k from the full L partition
    const int np = (ns - 1) * dx;
    const int ncols = (k - 1) * dd;
    MomentWindow::Partition part;
    part.past_priv = p.topLeftCorner(np, np);
    part.cross_umv = b.p_umv.bottomLeftCorner(dx, np);
    part.corner_umv = b.p_umv.bottomRightCorner(dx, dx);
    const Matrix l11 = b.l_full.topLeftCorner(np, ncols);
    const Matrix l21 = b.l_full.bottomLeftCorner(dx, ncols);
    const Matrix a_k = a_matrix(part.past_priv, part.cross_umv, part.corner_umv, l11, l21);
    Bound closed = pcrlb(sigmas.back(), a_k, model.G(k - 1));

    // route 2: bottom-right block of the inverse Fisher matrix
    const Matrix pil = spd_solve(p, b.l_full, "crlb_oracle: window covariance");
    const Matrix fisher = symmetrized(b.l_full.transpose() * pil);
    Eigen::LDLT<Matrix> ldlt(fisher);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw IllConditionedError("crlb_oracle: singular Fisher matrix");
    const Matrix finv = ldlt.solve(Matrix::Identity(fisher.rows(), fisher.cols()));
    const Matrix b_from_fisher = finv.bottomRightCorner(dd, dd);

    CrlbResult r;
    r.B = closed.mat;
    r.trace = closed.trace;
    r.route_gap = (closed.mat - b_from_fisher).cwiseAbs().maxCoeff();
    return r;
}

Matrix approximation_error(const Matrix& fisher, int ns, int dim_d) {
    const int nc = ns * dim_d;
    const int na = static_cast<int>(fisher.rows()) - nc;
    if (na < 0) throw std::invalid_argument("approximation_error: Fisher matrix too small");
    if (na == 0) return Matrix::Zero(dim_d, dim_d);
    const Matrix a = fisher.topLeftCorner(na, na);
    const Matrix b = fisher.topRightCorner(na, nc);
    const Matrix c = fisher.bottomRightCorner(nc, nc);
    const Matrix cib_t = spd_solve(c, b.transpose(), "approximation_error: C block");
    const Matrix schur = symmetrized(a - b * cib_t);
    const Matrix mid = spd_solve(schur, cib_t.transpose(), "approximation_error: A - B C^-1 B^T");
    const Matrix e_full = symmetrized(cib_t * mid);
    return e_full.bottomRightCorner(dim_d, dim_d);
}

}  // namespace crlbpf::crlb
