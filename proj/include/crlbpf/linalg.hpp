#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace crlbpf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when a matrix required to be (numerically) invertible is not.
class IllConditionedError : public std::runtime_error {
public:
    explicit IllConditionedError(const std::string& what) : std::runtime_error(what) {}
};

inline Matrix symmetrized(const Matrix& a) { return 0.5 * (a + a.transpose()); }

inline double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Numerical rank with the usual threshold max(dim) * sigma_max * 2^-40.
int numeric_rank(const Matrix& a);

// Solve A X = B for symmetric positive definite A via Cholesky.
// Throws IllConditionedError when cond(A) > cond_limit (default 1e12).
Matrix spd_solve(const Matrix& a, const Matrix& b, const std::string& label,
                 double cond_limit = 1e12);

// Symmetric square root of a PSD matrix: eigendecomposition with negative
// eigenvalues clipped at zero. Cholesky factor is used when strictly PD.
Matrix psd_sqrt(const Matrix& a);

// Inverse square root of a symmetric positive definite matrix.
Matrix spd_inv_sqrt(const Matrix& a, const std::string& label);

}  // namespace crlbpf
