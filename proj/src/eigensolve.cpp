#include "pqstrip/eigensolve.hpp"

#include "pqstrip/log.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <random>
#include <stdexcept>

namespace pqstrip {
namespace {

template <typename Scalar>
double solve_impl(const Eigen::SparseMatrix<Scalar>& A, const Eigen::VectorXd& mass, const EigenOptions& opt) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const Eigen::Index n = A.rows();
    if (A.cols() != n || mass.size() != n) throw std::invalid_argument("eigen solve: size mismatch");
    if (n == 0) return 0.0;

    const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
    Eigen::SparseMatrix<Scalar> B = inv_sqrt.cast<Scalar>().asDiagonal() * A * inv_sqrt.cast<Scalar>().asDiagonal();
    double scale = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(B.coeff(i, i)));
    if (scale == 0.0) return 0.0;
    const double threshold = opt.zero_tolerance * scale;

    if (n <= opt.dense_limit) {
        Eigen::SelfAdjointEigenSolver<Mat> es{Mat(B)};
        for (Eigen::Index i = 0; i < n; ++i)
            if (es.eigenvalues()(i) > threshold) return es.eigenvalues()(i);
        return 0.0;
    }

    Eigen::SparseMatrix<Scalar> shifted = B;
    for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += Scalar(1e-6 * scale);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("eigen solve: factorization failed");

    std::mt19937 rng(12345);
    std::normal_distribution<double> nd;
    for (int k = std::min<Eigen::Index>(opt.block_size, n); k <= std::min<Eigen::Index>(64, n); k *= 2) {
        Mat X(n, k);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = Scalar(nd(rng));
        double prev = -1.0;
        for (int it = 0; it < opt.max_iterations; ++it) {
            Mat Y = ldlt.solve(X);
            Eigen::HouseholderQR<Mat> qr(Y);
            X = qr.householderQ() * Mat::Identity(n, k);
            Mat H = X.adjoint() * (B * X);
            H = (H + H.adjoint()).eval() * Scalar(0.5);
            Eigen::SelfAdjointEigenSolver<Mat> es(H);
            X = X * es.eigenvectors();
            int target = -1;
            for (int i = 0; i < k; ++i)
                if (es.eigenvalues()(i) > threshold) {
                    target = i;
                    break;
                }
            if (target < 0 || target > k - 3) {
                if (it > 50) break;  // kernel fills the block; enlarge
                continue;
            }
            const double theta = es.eigenvalues()(target);
            const Vec x = X.col(target);
            const double res = (B * x - Scalar(theta) * x).norm();
            if (res <= opt.tolerance * scale && std::abs(theta - prev) <= opt.tolerance * scale) return theta;
            prev = theta;
        }
        log_debug("eigen solve: enlarging block beyond " + std::to_string(k));
    }
    throw std::runtime_error("eigen solve: smallest nonzero eigenvalue did not converge");
}

}  // namespace

double smallest_nonzero_eigenvalue(const Eigen::SparseMatrix<std::complex<double>>& A, const Eigen::VectorXd& mass,
                                   const EigenOptions& options) {
    return solve_impl(A, mass, options);
}

double smallest_nonzero_eigenvalue(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& mass,
                                   const EigenOptions& options) {
    return solve_impl(A, mass, options);
}

}  // namespace pqstrip
