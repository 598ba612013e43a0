#include "crlbpf/linalg.hpp"

#include <cmath>

namespace crlbpf {

int numeric_rank(const Matrix& a) {
    if (a.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double thresh =
        static_cast<double>(std::max(a.rows(), a.cols())) * sv(0) * std::ldexp(1.0, -40);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh) ++r;
    return r;
}

Matrix spd_solve(const Matrix& a, const Matrix& b, const std::string& label,
                 double cond_limit) {
    const Matrix as = symmetrized(a);
    Eigen::SelfAdjointEigenSolver<Matrix> es(as, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > cond_limit * lo)
        throw IllConditionedError(label + ": matrix singular or condition number > " +
                                  std::to_string(cond_limit));
    return Eigen::LLT<Matrix>(as).solve(b);
}

Matrix psd_sqrt(const Matrix& a) {
    const Matrix as = symmetrized(a);
    Eigen::LLT<Matrix> llt(as);
    if (llt.info() == Eigen::Success && as.size() > 0) {
        // strictly PD path
        return Matrix(llt.matrixL());
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(as);
    Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

Matrix spd_inv_sqrt(const Matrix& a, const std::string& label) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a));
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw IllConditionedError(label + ": matrix not positive definite");
    Vector ev = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace crlbpf
