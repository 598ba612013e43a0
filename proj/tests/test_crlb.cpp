#include <doctest.h>

#include <cmath>

#include "crlbpf/crlb.hpp"
#include "support.hpp"

using namespace crlbpf;

namespace {

SystemModel scalar_model(double F, double G, double Q, double R, double P0v) {
    Matrix Fm(1, 1), Gm(1, 1), Hm(1, 1), Qm(1, 1), Rm(1, 1), P0(1, 1);
    Fm << F;
    Gm << G;
    Hm << 1.0;
    Qm << Q;
    Rm << R;
    P0 << P0v;
    Vector x0(1);
    x0 << 0.1;
    return SystemModel::constant(Fm, Gm, Hm, Qm, Rm, x0, P0);
}

}  // namespace

TEST_CASE("tilde L: scalar D = 0 structure") {
    // H = 1 gives K = 1 and D = 0: L_tilde = [[G, 0], [F G, G]]
    const double F = 0.75, G = 1.75;
    const SystemModel m = scalar_model(F, G, 0.1, 0.05, 0.01);
    std::deque<Matrix> gains{Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
    const crlb::TildeL tl = crlb::build_tilde_L(m, gains, 3);
    CHECK(tl.full(0, 0) == doctest::Approx(G).epsilon(1e-14));
    CHECK(tl.full(0, 1) == 0.0);
    CHECK(tl.full(1, 0) == doctest::Approx(F * G).epsilon(1e-14));
    CHECK(tl.full(1, 1) == doctest::Approx(G).epsilon(1e-14));
    CHECK(tl.l11(0, 0) == doctest::Approx(G).epsilon(1e-14));
    CHECK(tl.l21(0, 0) == doctest::Approx(F * G).epsilon(1e-14));
}

TEST_CASE("tilde L: diagonal blocks equal G by unbiasedness") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
        const crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);
        const int dx = inst.model.dim_x, dd = inst.model.dim_d;
        for (int i = 0; i < inst.ns; ++i) {
            const Matrix diag = tl.full.block(i * dx, i * dd, dx, dd);
            const Matrix g = inst.model.G(std::max(inst.k - inst.ns + i, 0));
            CHECK((diag - g).norm() <= 1e-10 * g.norm());
        }
    }
}

TEST_CASE("tilde L equals the trailing columns of the full L") {
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
        const crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);
        const crlb::BatchOracle b =
            crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
        const int cols = inst.ns * inst.model.dim_d;
        CHECK((tl.full - b.l_full.rightCols(cols)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("A-tilde: formula matches the naive conditional-covariance oracle") {
    // scalar N_s = 2 building model, plus random instances
    Rng rng(23);
    for (int trial = 0; trial < 12; ++trial) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        const crlb::BatchOracle b =
            crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
        const int dx = inst.model.dim_x, dd = inst.model.dim_d;
        const int np = (inst.ns - 1) * dx;
        MomentWindow::Partition part;
        part.past_priv = b.p_umv.topLeftCorner(np, np);
        for (int i = 0; i + 1 < inst.ns; ++i)
            part.past_priv.block(i * dx, i * dx, dx, dx) += inst.sigmas[i];
        part.cross_umv = b.p_umv.bottomLeftCorner(dx, np);
        part.corner_umv = b.p_umv.bottomRightCorner(dx, dx);
        std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
        const crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);

        const Matrix a = crlb::pcrlb_A(part, tl);
        const Matrix a_naive = testing::naive_a_matrix(part.past_priv, part.cross_umv,
                                                       part.corner_umv, tl.l11, tl.l21);
        CHECK((a - a_naive).cwiseAbs().maxCoeff() < 1e-9);

        // the correction term is PSD, so A-tilde dominates the Schur complement
        const Matrix pinv_cross =
            spd_solve(part.past_priv, part.cross_umv.transpose(), "test");
        const Matrix schur = part.corner_umv - part.cross_umv * pinv_cross;
        CHECK(min_eigenvalue(a - schur) >= -1e-10);
        (void)dd;
    }
}

TEST_CASE("pcrlb: scalar closed form and monotonicity") {
    Matrix sigma(1, 1), a(1, 1), g(1, 1);
    sigma << 0.29;
    a << 0.2;
    g << 1.75;
    const crlb::Bound b = crlb::pcrlb(sigma, a, g);
    CHECK(b.trace == doctest::Approx(0.49 / (1.75 * 1.75)).epsilon(1e-12));

    // scaling sigma up can only raise the bound
    double prev = b.trace;
    for (double t : {2.0, 5.0, 20.0, 200.0}) {
        const double cur = crlb::pcrlb(t * sigma, a, g).trace;
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("fisher oracle: direct Gaussian case") {
    // F = 0 decorrelates the window; xhat_1 = d_0 + w_0 + v_1 so the Fisher
    // information of d_0 is 1 / (Q + R)
    const SystemModel m = scalar_model(0.0, 1.0, 0.3, 0.2, 0.5);
    const std::vector<Matrix> gains = testing::gains_up_to(m, 1);
    const std::vector<Matrix> sigmas(2, Matrix::Zero(1, 1));
    const Matrix fisher = crlb::fisher_oracle(m, gains, sigmas, 1, 2);
    CHECK(fisher.rows() == 1);
    CHECK(fisher(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("fisher oracle matches finite differences and is PSD") {
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        const Matrix fisher =
            crlb::fisher_oracle(inst.model, inst.gains, inst.sigmas, inst.k, inst.ns);
        CHECK(min_eigenvalue(fisher) >= -1e-10);

        std::vector<Vector> d_base(inst.k);
        for (auto& d : d_base) {
            d = Vector::Zero(inst.model.dim_d);
            for (int c = 0; c < inst.model.dim_d; ++c) d(c) = rng.uniform(-2.0, 2.0);
        }
        const Matrix jac =
            testing::fd_mean_jacobian(inst.model, inst.gains, d_base, inst.k, inst.ns);
        const crlb::BatchOracle b =
            crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
        Matrix p = b.p_umv;
        for (int i = 0; i < inst.ns; ++i)
            p.block(i * inst.model.dim_x, i * inst.model.dim_x, inst.model.dim_x,
                    inst.model.dim_x) += inst.sigmas[i];
        const Matrix fisher_fd = jac.transpose() * spd_solve(p, jac, "test");
        CHECK((fisher - fisher_fd).norm() / fisher.norm() < 1e-4);
    }
}

TEST_CASE("fisher oracle: the window covariance does not depend on d") {
    Rng rng(53);
    const testing::OracleInstance inst = testing::random_oracle_instance(rng);
    std::vector<Vector> d1(inst.k), d2(inst.k);
    for (int j = 0; j < inst.k; ++j) {
        d1[j] = Vector::Zero(inst.model.dim_d);
        d2[j] = Vector::Zero(inst.model.dim_d);
        for (int c = 0; c < inst.model.dim_d; ++c) {
            d1[j](c) = rng.uniform(-3.0, 3.0);
            d2[j](c) = rng.uniform(-3.0, 3.0);
        }
    }
    const Matrix j1 = testing::fd_mean_jacobian(inst.model, inst.gains, d1, inst.k, inst.ns);
    const Matrix j2 = testing::fd_mean_jacobian(inst.model, inst.gains, d2, inst.k, inst.ns);
    // linearity makes these equal up to the finite-difference rounding floor,
    // which is about |mean| * eps / step
    CHECK((j1 - j2).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, j1.cwiseAbs().maxCoeff()));
}

TEST_CASE("crlb oracle: two routes agree; sigma monotonicity; PCRLB is a lower bound") {
    Rng rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        const crlb::CrlbResult res =
            crlb::crlb_oracle(inst.model, inst.gains, inst.sigmas, inst.k, inst.ns);
        CHECK(res.route_gap < 1e-8);

        // growing the last sigma raises the CRLB trace
        std::vector<Matrix> bumped = inst.sigmas;
        bumped.back() += 0.5 * Matrix::Identity(inst.model.dim_x, inst.model.dim_x);
        const crlb::CrlbResult res2 =
            crlb::crlb_oracle(inst.model, inst.gains, bumped, inst.k, inst.ns);
        CHECK(res2.trace >= res.trace - 1e-12);

        // PCRLB from the same window
        const crlb::BatchOracle b =
            crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
        const int dx = inst.model.dim_x;
        const int np = (inst.ns - 1) * dx;
        MomentWindow::Partition part;
        part.past_priv = b.p_umv.topLeftCorner(np, np);
        for (int i = 0; i + 1 < inst.ns; ++i)
            part.past_priv.block(i * dx, i * dx, dx, dx) += inst.sigmas[i];
        part.cross_umv = b.p_umv.bottomLeftCorner(dx, np);
        part.corner_umv = b.p_umv.bottomRightCorner(dx, dx);
        std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
        const crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);
        const crlb::Bound pb = crlb::pcrlb(inst.sigmas.back(), crlb::pcrlb_A(part, tl),
                                           inst.model.G(inst.k - 1));
        CHECK(res.trace >= pb.trace - 1e-8);
    }
}

TEST_CASE("crlb oracle guards its horizon") {
    auto [m, in] = two_dim_scenario();
    const std::vector<Matrix> gains = testing::gains_up_to(m, 14);
    const std::vector<Matrix> sigmas(3, 0.1 * Matrix::Identity(2, 2));
    CHECK_THROWS_AS(crlb::crlb_oracle(m, gains, sigmas, 14, 3), std::invalid_argument);
}

TEST_CASE("approximation error closes the PCRLB gap") {
    Rng rng(71);
    int checked = 0;
    while (checked < 8) {
        const testing::OracleInstance inst = testing::random_oracle_instance(rng);
        if (inst.k == inst.ns) continue;  // gap is exactly zero there
        ++checked;
        const crlb::CrlbResult res =
            crlb::crlb_oracle(inst.model, inst.gains, inst.sigmas, inst.k, inst.ns);
        const Matrix fisher =
            crlb::fisher_oracle(inst.model, inst.gains, inst.sigmas, inst.k, inst.ns);
        const Matrix e = crlb::approximation_error(fisher, inst.ns, inst.model.dim_d);
        CHECK(min_eigenvalue(e) >= -1e-10);

        const crlb::BatchOracle b =
            crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
        const int dx = inst.model.dim_x;
        const int np = (inst.ns - 1) * dx;
        MomentWindow::Partition part;
        part.past_priv = b.p_umv.topLeftCorner(np, np);
        for (int i = 0; i + 1 < inst.ns; ++i)
            part.past_priv.block(i * dx, i * dx, dx, dx) += inst.sigmas[i];
        part.cross_umv = b.p_umv.bottomLeftCorner(dx, np);
        part.corner_umv = b.p_umv.bottomRightCorner(dx, dx);
        std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
        const crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);
        const crlb::Bound pb = crlb::pcrlb(inst.sigmas.back(), crlb::pcrlb_A(part, tl),
                                           inst.model.G(inst.k - 1));
        CHECK((res.B - pb.mat - e).cwiseAbs().maxCoeff() < 1e-8);
    }

    // a block-diagonal Fisher matrix has no gap at all
    Matrix fisher = Matrix::Zero(4, 4);
    fisher.topLeftCorner(2, 2) = 2.0 * Matrix::Identity(2, 2);
    fisher.bottomRightCorner(2, 2) = 3.0 * Matrix::Identity(2, 2);
    CHECK(crlb::approximation_error(fisher, 2, 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("A-tilde reduces to the Schur complement when the correction factor vanishes") {
    Rng rng(83);
    const testing::OracleInstance inst = testing::random_oracle_instance(rng);
    const crlb::BatchOracle b = crlb::build_batch(inst.model, inst.gains, inst.k, inst.ns);
    const int dx = inst.model.dim_x;
    const int np = (inst.ns - 1) * dx;
    MomentWindow::Partition part;
    part.past_priv = b.p_umv.topLeftCorner(np, np);
    for (int i = 0; i + 1 < inst.ns; ++i)
        part.past_priv.block(i * dx, i * dx, dx, dx) += inst.sigmas[i];
    part.cross_umv = b.p_umv.bottomLeftCorner(dx, np);
    part.corner_umv = b.p_umv.bottomRightCorner(dx, dx);
    std::deque<Matrix> gains(inst.gains.end() - inst.ns, inst.gains.end());
    crlb::TildeL tl = crlb::build_tilde_L(inst.model, gains, inst.k);
    // force L21 = cross P^-1 L11 so the second summand is exactly zero
    tl.l21 = part.cross_umv * spd_solve(part.past_priv, tl.l11, "test");
    const Matrix a = crlb::pcrlb_A(part, tl);
    const Matrix schur =
        part.corner_umv -
        part.cross_umv * spd_solve(part.past_priv, part.cross_umv.transpose(), "test");
    CHECK((a - symmetrized(schur)).cwiseAbs().maxCoeff() < 1e-10);
}
