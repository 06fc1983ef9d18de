#include "pqstrip/curl_qp.hpp"

#include "pqstrip/log.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <string_view>
#include <unordered_set>

namespace pqstrip {

CurlQpResult project_curl_free(const Eigen::SparseMatrix<double>& C, const Eigen::VectorXd& gamma_d,
                               const CurlQpOptions& opt, const std::vector<signed char>* warm_start) {
    if (!(opt.s_low > 0 && opt.s_low <= 1.0 && opt.s_high >= 1.0)) throw std::invalid_argument("invalid density bounds");
    if (!(opt.density_reg > 0)) throw std::invalid_argument("density regularization must be positive");
    const Eigen::Index n2 = gamma_d.size(), nf = n2 / 2, m = C.rows();
    if (C.cols() != n2) throw std::invalid_argument("curl matrix does not match the field size");
    Eigen::VectorXd a = opt.scale_weights.size() == nf ? opt.scale_weights : Eigen::VectorXd::Ones(nf);
    a /= a.sum();

    // Unknowns (gamma, s, y, nu); lower triangle of
    // [ I  -B   C^T  0 ; -B^T  Dg  0  a ; C  0  -delta  0 ; 0  a^T  0  -delta ].
    const Eigen::Index is = n2, iy = n2 + nf, inu = n2 + nf + m, N = inu + 1;
    std::vector<signed char> active(nf, 0);
    if (warm_start && static_cast<Eigen::Index>(warm_start->size()) == nf) active = *warm_start;

    auto assemble = [&](Eigen::SparseMatrix<double>& K) {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(n2 + 4 * nf + C.nonZeros() + m + 1);
        for (Eigen::Index i = 0; i < n2; ++i) t.emplace_back(i, i, 1.0);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const bool free = active[f] == 0;
            for (int j = 0; j < 2; ++j) t.emplace_back(is + f, 2 * f + j, free ? -gamma_d(2 * f + j) : 0.0);
            t.emplace_back(is + f, is + f, free ? gamma_d.segment<2>(2 * f).squaredNorm() + opt.density_reg : 1.0);
            t.emplace_back(inu, is + f, free ? a(f) : 0.0);
        }
        for (int k = 0; k < C.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(C, k); it; ++it)
                t.emplace_back(iy + it.row(), it.col(), it.value());
        for (Eigen::Index i = iy; i < N; ++i) t.emplace_back(i, i, -opt.regularization);
        K.resize(N, N);
        K.setFromTriplets(t.begin(), t.end());
    };

    Eigen::SparseMatrix<double> K;
    assemble(K);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt;
    ldlt.analyzePattern(K);

    auto hash_active = [](const std::vector<signed char>& v) {
        return std::hash<std::string_view>{}(std::string_view(reinterpret_cast<const char*>(v.data()), v.size()));
    };
    std::unordered_set<std::size_t> seen{hash_active(active)};
    Eigen::Index limit = nf;

    CurlQpResult res;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        if (it > 1) assemble(K);
        ldlt.factorize(K);
        if (ldlt.info() != Eigen::Success) throw SolverError("curl projection: KKT factorization failed");
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
        rhs(inu) = 1.0;
        for (Eigen::Index f = 0; f < nf; ++f) {
            if (active[f] == 0) {
                rhs(is + f) = opt.density_reg;
            } else {
                const double b = active[f] < 0 ? opt.s_low : opt.s_high;
                rhs.segment<2>(2 * f) = b * gamma_d.segment<2>(2 * f);
                rhs(is + f) = b;
                rhs(inu) -= a(f) * b;
            }
        }
        const Eigen::VectorXd x = ldlt.solve(rhs);
        res.gamma = x.head(n2);
        res.s = x.segment(is, nf);
        const Eigen::VectorXd y = x.segment(iy, m);
        const double nu = x(inu);

        // halved Lagrangian gradient in s without the bound multipliers
        Eigen::VectorXd grad(nf);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Eigen::Vector2d gd = gamma_d.segment<2>(2 * f);
            grad(f) = -gd.dot(res.gamma.segment<2>(2 * f) - res.s(f) * gd) + opt.density_reg * (res.s(f) - 1.0) +
                      a(f) * nu;
        }

        std::vector<signed char> next(nf, 0);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const double mult = active[f] == 0 ? 0.0 : -grad(f);
            if (mult + (res.s(f) - opt.s_high) > 0)
                next[f] = 1;
            else if (mult + (res.s(f) - opt.s_low) < 0)
                next[f] = -1;
        }
        res.iterations = it;
        if (next != active) {
            if (!seen.insert(hash_active(next)).second) {
                // cycling: only flip the most violated indices, fewer each time
                limit = std::max<Eigen::Index>(1, limit / 2);
                std::vector<std::pair<double, Eigen::Index>> viol;
                for (Eigen::Index f = 0; f < nf; ++f)
                    if (next[f] != active[f])
                        viol.emplace_back(-std::max(res.s(f) - opt.s_high, opt.s_low - res.s(f)) -
                                              (active[f] ? std::abs(grad(f)) : 0.0),
                                          f);
                std::sort(viol.begin(), viol.end());
                for (std::size_t k = static_cast<std::size_t>(limit); k < viol.size(); ++k)
                    next[viol[k].second] = active[viol[k].second];
            }
            active = std::move(next);
            continue;
        }

        res.active = active;
        res.max_curl = m ? (C * res.gamma).cwiseAbs().maxCoeff() : 0.0;
        Eigen::VectorXd r = res.gamma;
        for (Eigen::Index f = 0; f < nf; ++f) r.segment<2>(2 * f) -= res.s(f) * gamma_d.segment<2>(2 * f);
        if (m) r += C.transpose() * y;
        double kkt = std::max(r.cwiseAbs().maxCoeff(), res.max_curl);
        kkt = std::max(kkt, std::abs(a.dot(res.s) - 1.0));
        for (Eigen::Index f = 0; f < nf; ++f) {
            if (active[f] == 0)
                kkt = std::max(kkt, std::abs(grad(f)));
            else
                kkt = std::max(kkt, std::max(0.0, active[f] > 0 ? grad(f) : -grad(f)));
            kkt = std::max(kkt, std::max(0.0, opt.s_low - res.s(f)));
            kkt = std::max(kkt, std::max(0.0, res.s(f) - opt.s_high));
        }
        res.kkt_residual = kkt;
        if (kkt > opt.tolerance)
            log_warn("curl projection: KKT residual " + std::to_string(kkt) + " above tolerance");
        return res;
    }
    throw SolverError("curl projection: active set did not settle within " + std::to_string(opt.max_iterations) +
                      " iterations");
}

}  // namespace pqstrip
