#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>

namespace pqstrip {

struct EigenOptions {
    double zero_tolerance = 1e-8;  // relative to the largest diagonal entry of M^-1/2 A M^-1/2
    int block_size = 8;
    int max_iterations = 500;
    double tolerance = 1e-9;  // relative residual of the target Ritz pair
    int dense_limit = 600;    // solve densely up to this size
};

/// Smallest eigenvalue above the zero threshold of the generalized Hermitian
/// problem A x = lambda diag(mass) x. Returns 0 when no nonzero eigenvalue was
/// found (A vanishes numerically).
double smallest_nonzero_eigenvalue(const Eigen::SparseMatrix<std::complex<double>>& A,
                                   const Eigen::VectorXd& mass, const EigenOptions& options = {});

/// Real symmetric counterpart.
double smallest_nonzero_eigenvalue(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& mass,
                                   const EigenOptions& options = {});

}  // namespace pqstrip
