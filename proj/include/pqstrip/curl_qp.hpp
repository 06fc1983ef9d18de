#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <vector>

namespace pqstrip {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CurlQpOptions {
    double s_low = 0.4;
    double s_high = 1.6;
    // Tikhonov weight of sum (s - 1)^2; keeps the problem strictly convex.
    double density_reg = 1e-3;
    // Optional per-face weights of the scale constraint sum_f a_f s_f = 1
    // (sum a_f = 1). Empty: uniform.
    Eigen::VectorXd scale_weights;
    double tolerance = 1e-6;       // KKT residual
    double regularization = 1e-10; // dual diagonal of the quasi-definite system
    int max_iterations = 200;
};

struct CurlQpResult {
    Eigen::VectorXd gamma;  // interleaved 2F
    Eigen::VectorXd s;      // per face
    std::vector<signed char> active;  // -1 at s_low, +1 at s_high, 0 free
    int iterations = 0;
    double kkt_residual = 0.0;
    double max_curl = 0.0;
};

/// min |gamma - s gamma_d|^2 + density_reg |s - 1|^2  s.t.  C gamma = 0,
/// s_low <= s <= s_high, weighted mean of s equal to 1. Primal-dual active
/// set on s; each step solves a sparse quasi-definite KKT system.
/// `warm_start` may carry the active set of a previous solve. Throws
/// SolverError when the active set does not settle.
CurlQpResult project_curl_free(const Eigen::SparseMatrix<double>& C, const Eigen::VectorXd& gamma_d,
                               const CurlQpOptions& options = {},
                               const std::vector<signed char>* warm_start = nullptr);


}  // namespace pqstrip
