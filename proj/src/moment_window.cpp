#include "crlbpf/moment_window.hpp"

#include <stdexcept>

namespace crlbpf {

MomentWindow::MomentWindow(const SystemModel& model, const Matrix& K0, int window)
    : ns_(window), dx_(model.dim_x) {
    if (window < 2) throw std::invalid_argument("MomentWindow: window must be >= 2");
    const Matrix H0 = model.H(0);
    const Matrix R0 = model.R(0);
    cov_xx_ = model.P0;
    cov_xhat_ = model.P0 * H0.transpose() * K0.transpose();
    cov_hh_ = symmetrized(K0 * H0 * model.P0 * H0.transpose() * K0.transpose() +
                          K0 * R0 * K0.transpose());
    diag_hist_.push_back(cov_hh_);
    rows_.push_back({});
}

void MomentWindow::step(const SystemModel& model, const Matrix& K_k) {
    const int k = k_ + 1;
    const Matrix F = model.F(k - 1);
    const Matrix H = model.H(k);
    const Matrix D = (Matrix::Identity(dx_, dx_) - K_k * H) * F;
    const Matrix KHF = K_k * H * F;

    // lag blocks advance before the diagonal ones overwrite their inputs
    std::vector<Matrix> x_cross_new, hat_cross_new;
    x_cross_new.reserve(ns_ - 1);
    hat_cross_new.reserve(ns_ - 1);
    x_cross_new.push_back(F * cov_xhat_);
    hat_cross_new.push_back(D * cov_hh_ + KHF * cov_xhat_);
    for (int j = 2; j <= ns_ - 1; ++j) {
        if (j - 2 >= static_cast<int>(x_cross_.size())) break;
        x_cross_new.push_back(F * x_cross_[j - 2]);
        hat_cross_new.push_back(D * hat_cross_[j - 2] + KHF * x_cross_[j - 2]);
    }

    const Matrix cov_xx_new = symmetrized(F * cov_xx_ * F.transpose() + model.Q(k - 1));
    const Matrix cov_hh_new = symmetrized(
        D * cov_hh_ * D.transpose() +
        D * cov_xhat_.transpose() * F.transpose() * H.transpose() * K_k.transpose() +
        KHF * cov_xhat_ * D.transpose() +
        K_k * H * cov_xx_new * H.transpose() * K_k.transpose() +
        K_k * model.R(k) * K_k.transpose());
    const Matrix cov_xhat_new =
        F * cov_xhat_ * D.transpose() + cov_xx_new * H.transpose() * K_k.transpose();

    cov_xx_ = cov_xx_new;
    cov_hh_ = cov_hh_new;
    cov_xhat_ = cov_xhat_new;
    x_cross_ = std::move(x_cross_new);
    hat_cross_ = std::move(hat_cross_new);
    k_ = k;

    diag_hist_.push_back(cov_hh_);
    rows_.push_back(hat_cross_);
    if (static_cast<int>(diag_hist_.size()) > ns_) {
        diag_hist_.pop_front();
        rows_.pop_front();
    }
}

void MomentWindow::record_sigma(Matrix sigma) {
    if (last_sigma_k_ >= k_)
        throw std::logic_error("MomentWindow::record_sigma: sigma already recorded for this step");
    sigma_hist_.push_back(std::move(sigma));
    last_sigma_k_ = k_;
    if (static_cast<int>(sigma_hist_.size()) > ns_) sigma_hist_.pop_front();
}

Matrix MomentWindow::assemble_umv() const {
    if (!full())
        throw std::logic_error("MomentWindow: window not yet full (k < N_s - 1)");
    const int n = static_cast<int>(diag_hist_.size());
    Matrix P = Matrix::Zero(n * dx_, n * dx_);
    for (int i = 0; i < n; ++i) {
        P.block(i * dx_, i * dx_, dx_, dx_) = diag_hist_[i];
        for (int j = 0; j < i; ++j) {
            const Matrix& blk = rows_[i][i - j - 1];  // Cov(xhat_{t_i}, xhat_{t_j})
            P.block(i * dx_, j * dx_, dx_, dx_) = blk;
            P.block(j * dx_, i * dx_, dx_, dx_) = blk.transpose();
        }
    }
    return P;
}

MomentWindow::Partition MomentWindow::partition() const {
    if (last_sigma_k_ < k_ - 1 || static_cast<int>(sigma_hist_.size()) < ns_ - 1)
        throw std::logic_error("MomentWindow::partition: sigma history incomplete");
    const Matrix P = assemble_umv();
    const int np = (ns_ - 1) * dx_;
    Partition part;
    part.past_priv = P.topLeftCorner(np, np);
    // sigmas for times k'..k-1 are the most recent ns_-1 entries up to step k-1
    const int skip = static_cast<int>(sigma_hist_.size()) - (ns_ - 1) - (last_sigma_k_ == k_ ? 1 : 0);
    for (int i = 0; i < ns_ - 1; ++i)
        part.past_priv.block(i * dx_, i * dx_, dx_, dx_) += sigma_hist_[skip + i];
    part.cross_umv = P.bottomLeftCorner(dx_, np);
    part.corner_umv = P.bottomRightCorner(dx_, dx_);
    return part;
}

MomentWindow::Joint MomentWindow::assemble() const {
    if (last_sigma_k_ != k_ || static_cast<int>(sigma_hist_.size()) < ns_)
        throw std::logic_error("MomentWindow::assemble: sigma history incomplete");
    Joint j;
    j.p_umv = assemble_umv();
    j.p_priv = j.p_umv;
    const int base = static_cast<int>(sigma_hist_.size()) - ns_;
    for (int i = 0; i < ns_; ++i)
        j.p_priv.block(i * dx_, i * dx_, dx_, dx_) += sigma_hist_[base + i];
    return j;
}

}  // namespace crlbpf
