#include "crlbpf/noise_design.hpp"

#include <stdexcept>

namespace crlbpf::noise {

GSvd svd_G(const Matrix& G_prev) {
    const int dx = static_cast<int>(G_prev.rows());
    const int dd = static_cast<int>(G_prev.cols());
    Eigen::JacobiSVD<Matrix> svd(G_prev, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector sv = svd.singularValues();
    const double thresh = static_cast<double>(std::max(dx, dd)) * sv(0) * std::ldexp(1.0, -40);
    if (sv(dd - 1) <= thresh)
        throw std::invalid_argument("svd_G: G is rank deficient");
    GSvd out;
    out.U = svd.matrixU();
    out.upsilon = sv;
    out.V = svd.matrixV().transpose();
    return out;
}

MPartition partition_M(const Matrix& a_tilde, double sigma_floor, const Matrix& U, int dim_d) {
    const int dx = static_cast<int>(U.rows());
    const Matrix m = symmetrized(
        U.transpose() * (a_tilde + sigma_floor * Matrix::Identity(dx, dx)) * U);
    MPartition p;
    p.a11 = m.topLeftCorner(dim_d, dim_d);
    p.a12 = m.topRightCorner(dim_d, dx - dim_d);
    p.a21 = m.bottomLeftCorner(dx - dim_d, dim_d);
    p.a22 = m.bottomRightCorner(dx - dim_d, dx - dim_d);
    return p;
}

SdpSolution solve_sdp(const MPartition& parts, const Vector& upsilon, double gamma) {
    const int dd = static_cast<int>(parts.a11.rows());
    const Vector w = upsilon.cwiseAbs2().cwiseInverse();
    Matrix corr = Matrix::Zero(dd, dd);
    if (parts.a22.size() > 0)
        corr = parts.a12 * spd_solve(parts.a22, parts.a21, "solve_sdp: A22");
    double c_prime = gamma;
    for (int i = 0; i < dd; ++i) c_prime += w(i) * (corr(i, i) - parts.a11(i, i));

    SdpSolution s;
    s.sigma11 = parts.a11;
    if (c_prime > 0.0) {
        int j = 0;
        for (int i = 1; i < dd; ++i)
            if (w(i) > w(j)) j = i;
        s.sigma11(j, j) += c_prime / w(j);
        s.active = true;
    }
    return s;
}

Matrix assemble_sigma(const Matrix& sigma11_star, const Matrix& a11, double sigma_floor,
                      const Matrix& U) {
    const int dx = static_cast<int>(U.rows());
    const int dd = static_cast<int>(a11.rows());
    Matrix inner = sigma_floor * Matrix::Identity(dx, dx);
    inner.topLeftCorner(dd, dd) += sigma11_star - a11;
    return symmetrized(U * inner * U.transpose());
}

NoiseDesign design_noise(const MomentWindow::Partition& window, const crlb::TildeL& tl,
                         const Matrix& G_prev, double gamma, double sigma_floor) {
    if (gamma < 0.0) throw std::invalid_argument("design_noise: gamma must be >= 0");
    if (sigma_floor <= 0.0) throw std::invalid_argument("design_noise: sigma_floor must be > 0");
    const int dx = static_cast<int>(G_prev.rows());

    NoiseDesign d;
    d.a_tilde = crlb::pcrlb_A(window, tl);
    if (gamma == 0.0) {
        d.sigma = sigma_floor * Matrix::Identity(dx, dx);
        d.trace_pcrlb = crlb::pcrlb(d.sigma, d.a_tilde, G_prev).trace;
        return d;
    }
    d.svd = svd_G(G_prev);
    d.parts = partition_M(d.a_tilde, sigma_floor, d.svd.U, static_cast<int>(G_prev.cols()));
    SdpSolution sol = solve_sdp(d.parts, d.svd.upsilon, gamma);
    d.sigma11_star = sol.sigma11;
    d.active = sol.active;
    d.sigma = sol.active ? assemble_sigma(d.sigma11_star, d.parts.a11, sigma_floor, d.svd.U)
                         : sigma_floor * Matrix::Identity(dx, dx);
    d.trace_pcrlb = crlb::pcrlb(d.sigma, d.a_tilde, G_prev).trace;
    return d;
}

}  // namespace crlbpf::noise
