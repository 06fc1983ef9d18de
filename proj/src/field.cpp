#include "pqstrip/field.hpp"

#include "pqstrip/eigensolve.hpp"
#include "pqstrip/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace pqstrip {

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::converged: return "converged";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::oscillating: return "oscillating";
    }
    return "?";
}

Eigen::VectorXcd implicit_align(const Eigen::VectorXcd& prev, const Eigen::VectorXd& w, const Eigen::VectorXcd& R_perp,
                                double omega_a, double mu_a) {
    if (!(mu_a > 0)) return prev;
    const double t = omega_a / mu_a;
    Eigen::VectorXcd out(prev.size());
    for (Eigen::Index f = 0; f < prev.size(); ++f) out(f) = (prev(f) + t * w(f) * R_perp(f)) / (1.0 + t * w(f));
    return out;
}

double lowest_nonzero_weight(const Eigen::VectorXd& w, double zero_tolerance) {
    double mu = 0.0;
    for (Eigen::Index f = 0; f < w.size(); ++f)
        if (w(f) > zero_tolerance && (mu == 0.0 || w(f) < mu)) mu = w(f);
    return mu;
}

SpMatC smoothness_matrix(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses,
                         const Eigen::VectorXd& w) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary() || mesh.crease_edge[e]) continue;
        const double c = masses.edge(e) * (1.0 - 0.5 * (w(ed.f0) + w(ed.f1)));
        const cplx a = std::conj(frames.edge_in_f0[e] * frames.edge_in_f0[e]);
        const cplx b = std::conj(frames.edge_in_f1[e] * frames.edge_in_f1[e]);
        t.emplace_back(ed.f0, ed.f0, c);
        t.emplace_back(ed.f1, ed.f1, c);
        t.emplace_back(ed.f0, ed.f1, -c * std::conj(a) * b);
        t.emplace_back(ed.f1, ed.f0, -c * std::conj(b) * a);
    }
    SpMatC L(mesh.num_faces(), mesh.num_faces());
    L.setFromTriplets(t.begin(), t.end());
    return L;
}

namespace {

SpMatC smoothing_system(const SpMatC& L2, const Eigen::VectorXd& face_mass, double step) {
    SpMatC A = L2 * cplx(step);
    for (Eigen::Index f = 0; f < face_mass.size(); ++f) A.coeffRef(f, f) += face_mass(f);
    return A;
}

}  // namespace

Eigen::VectorXcd implicit_smooth(const SpMatC& L2, const Eigen::VectorXd& face_mass, const Eigen::VectorXcd& Ga,
                                 double omega_s, double mu_s) {
    if (!(mu_s > 0)) return Ga;
    Eigen::SimplicialLDLT<SpMatC> solver(smoothing_system(L2, face_mass, omega_s / mu_s));
    if (solver.info() != Eigen::Success) throw SolverError("implicit smoothing: factorization failed");
    return solver.solve(face_mass.cast<cplx>().cwiseProduct(Ga));
}

Eigen::VectorXcd normalize_field(const Eigen::VectorXcd& Gs, const Eigen::VectorXcd& fallback, int* replaced) {
    Eigen::VectorXcd out(Gs.size());
    int count = 0;
    for (Eigen::Index f = 0; f < Gs.size(); ++f) {
        const double r = std::abs(Gs(f));
        if (r > 1e-14) {
            out(f) = Gs(f) / r;
            continue;
        }
        ++count;
        const double rf = std::abs(fallback(f));
        out(f) = rf > 1e-14 ? fallback(f) / rf : cplx(1.0, 0.0);
    }
    if (count > 0) log_info("normalize: kept previous value on " + std::to_string(count) + " near-zero faces");
    if (replaced) *replaced = count;
    return out;
}

cplx principal_root(cplx z) {
    double theta = std::atan2(z.imag(), z.real());
    if (theta <= -std::numbers::pi) theta = std::numbers::pi;
    return std::polar(std::sqrt(std::abs(z)), theta / 2.0);
}

RawField local_raw_representation(const TriMesh& mesh, const LocalFrames& frames, const DiscreteOperators& ops,
                                  const MassMatrices& masses, const Eigen::VectorXcd& unit_power, bool crease_curl) {
    Eigen::VectorXd roots(2 * unit_power.size());
    for (Eigen::Index f = 0; f < unit_power.size(); ++f) {
        const cplx g = principal_root(unit_power(f));
        roots(2 * f) = g.real();
        roots(2 * f + 1) = g.imag();
    }
    return raw_representation_from_roots(mesh, frames, ops, masses, roots, crease_curl);
}

RawField raw_representation_from_roots(const TriMesh& mesh, const LocalFrames& frames, const DiscreteOperators& ops,
                                       const MassMatrices& masses, const Eigen::VectorXd& roots, bool crease_curl) {
    const int nf = mesh.num_faces(), nv = mesh.num_vertices(), ne = mesh.num_edges();
    if (roots.size() != 2 * nf) throw std::invalid_argument("root field size does not match the mesh");
    RawField raw;
    raw.gamma = roots;
    std::vector<cplx> g(nf);
    for (int f = 0; f < nf; ++f) g[f] = cplx(roots(2 * f), roots(2 * f + 1));

    raw.matching.assign(ne, 0);
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary()) continue;
        const cplx other = frames.transport(e, ed.f1, g[ed.f1], mesh);
        raw.matching[e] = (std::conj(g[ed.f0]) * other).real() >= 0.0 ? 1 : -1;
    }

    const Eigen::VectorXd defect = angle_defects(mesh);
    raw.index = Eigen::VectorXd::Zero(nv);
    std::vector<Eigen::Triplet<double>> dt;
    for (int v = 0; v < nv; ++v) {
        const VertexRing& ring = mesh.rings[v];
        if (!ring.closed || mesh.boundary_vertex[v] || mesh.crease_vertex[v]) continue;
        const int n = static_cast<int>(ring.faces.size());
        double turn = 0.0;
        for (int i = 0; i < n; ++i) {
            const int fi = ring.faces[i], fn = ring.faces[(i + 1) % n];
            const int e = mesh.FE(fi, (ring.corners[i] + 2) % 3);
            const cplx next = static_cast<double>(raw.matching[e]) * frames.transport(e, fn, g[fn], mesh);
            turn += std::arg(next / g[fi]);
        }
        const double index = std::round((turn + defect(v)) / std::numbers::pi) / 2.0;
        raw.index(v) = index;
        if (index != 0.0) {
            raw.singular_vertices.push_back(v);
            continue;
        }
        const int row = static_cast<int>(raw.working_vertices.size());
        raw.working_vertices.push_back(v);
        double sign = 1.0;
        for (int i = 0; i < n; ++i) {
            const int f = ring.faces[i], c = ring.corners[i];
            const Eigen::Vector2d gc = ops.corner_gradient[f][c] * masses.face(f) * sign;
            dt.emplace_back(row, 2 * f, gc.x());
            dt.emplace_back(row, 2 * f + 1, gc.y());
            sign *= raw.matching[mesh.FE(f, (c + 2) % 3)];
        }
    }
    raw.D.resize(static_cast<Eigen::Index>(raw.working_vertices.size()), 2 * nf);
    raw.D.setFromTriplets(dt.begin(), dt.end());

    std::vector<Eigen::Triplet<double>> ct;
    for (int e = 0; e < ne; ++e) {
        const Edge& ed = mesh.edges[e];
        if (ed.is_boundary() || (!crease_curl && mesh.crease_edge[e])) continue;
        const int row = static_cast<int>(raw.curl_edges.size());
        raw.curl_edges.push_back(e);
        const double sigma = raw.matching[e];
        for (int j = 0; j < 2; ++j) {
            ct.emplace_back(row, 2 * ed.f0 + j, ops.edge_f0[e](j));
            ct.emplace_back(row, 2 * ed.f1 + j, -sigma * ops.edge_f1[e](j));
        }
    }
    raw.C.resize(static_cast<Eigen::Index>(raw.curl_edges.size()), 2 * nf);
    raw.C.setFromTriplets(ct.begin(), ct.end());
    return raw;
}

Eigen::VectorXd project_div_free(const RawField& raw, const Eigen::VectorXd& gamma_u, double linear_tolerance) {
    if (raw.D.rows() == 0) return gamma_u;
    SpMat A = raw.D * raw.D.transpose();
    const Eigen::VectorXd b = -(raw.D * gamma_u);
    Eigen::SimplicialLDLT<SpMat> solver(A);
    if (solver.info() != Eigen::Success) {
        log_warn("divergence projection: rank-deficient system, adding 1e-12 diagonal shift");
        for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += 1e-12;
        solver.compute(A);
        if (solver.info() != Eigen::Success) throw SolverError("divergence projection: factorization failed");
    }
    Eigen::VectorXd w = solver.solve(b);
    Eigen::VectorXd out = gamma_u + raw.D.transpose() * w;
    // one step of iterative refinement
    const Eigen::VectorXd r = raw.D * out;
    if (r.cwiseAbs().maxCoeff() > 0.1 * linear_tolerance) {
        w = solver.solve(-r);
        out += raw.D.transpose() * w;
    }
    const double residual = (raw.D * out).cwiseAbs().maxCoeff();
    if (residual > linear_tolerance)
        log_warn("divergence projection: residual " + std::to_string(residual) + " above tolerance");
    return out;
}

double alignment_energy(const Eigen::VectorXcd& Gamma, const Eigen::VectorXd& w, const Eigen::VectorXd& face_mass,
                        const Eigen::VectorXcd& R_perp) {
    double e = 0.0;
    for (Eigen::Index f = 0; f < Gamma.size(); ++f) e += face_mass(f) * w(f) * std::norm(Gamma(f) - R_perp(f));
    return e;
}

double smoothness_energy(const SpMatC& L2, const Eigen::VectorXcd& Gamma) {
    return Gamma.dot(L2 * Gamma).real();  // dot conjugates the first argument
}

double gl_energy(const RawField& raw, const MassMatrices& masses, const Eigen::VectorXd& gamma, double epsilon) {
    double e = 0.0;
    if (raw.D.rows() > 0) {
        const Eigen::VectorXd d = raw.D * gamma;
        for (size_t i = 0; i < raw.working_vertices.size(); ++i)
            e += d(i) * d(i) / masses.vertex(raw.working_vertices[i]);
    }
    for (Eigen::Index f = 0; f < masses.face.size(); ++f) {
        const double n2 = gamma.segment<2>(2 * f).squaredNorm() - 1.0;
        e += masses.face(f) * n2 * n2 / (epsilon * epsilon);
    }
    return e;
}

// ---------------------------------------------------------------------------

FieldOptimizer::FieldOptimizer(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses,
                               const DiscreteOperators& ops, const RulingData& rulings, OptimizerConfig config)
    : mesh_(mesh), frames_(frames), masses_(masses), ops_(ops), rulings_(rulings), config_(config) {
    if (!(config_.omega_a > 0 && config_.omega_s > 0 && config_.halving_period > 0 && config_.tolerance > 0 &&
          config_.max_iterations > 0 && config_.qp_tolerance > 0 && config_.linear_tolerance > 0))
        throw std::invalid_argument("optimizer parameters must be positive");
    L2_ = smoothness_matrix(mesh_, frames_, masses_, rulings_.w);
    mu_a_ = lowest_nonzero_weight(rulings_.w, config_.weight_zero_tolerance);
}

double FieldOptimizer::mu_s() {
    if (mu_s_ < 0) mu_s_ = smallest_nonzero_eigenvalue(L2_, masses_.face);
    return mu_s_;
}

Eigen::VectorXcd FieldOptimizer::align(const Eigen::VectorXcd& prev) const {
    return implicit_align(prev, rulings_.w, rulings_.R_perp, config_.omega_a, mu_a_);
}

Eigen::VectorXcd FieldOptimizer::smooth(const Eigen::VectorXcd& aligned, double omega_s) {
    const double mu = mu_s();
    if (!(mu > 0)) return aligned;
    const double step = omega_s / mu;
    if (!smooth_solver_ || step != cached_step_) {
        smooth_solver_ = std::make_unique<Eigen::SimplicialLDLT<SpMatC>>(smoothing_system(L2_, masses_.face, step));
        if (smooth_solver_->info() != Eigen::Success) throw SolverError("implicit smoothing: factorization failed");
        cached_step_ = step;
    }
    return smooth_solver_->solve(masses_.face.cast<cplx>().cwiseProduct(aligned));
}

FieldResult FieldOptimizer::optimize(const Callback& on_iteration) {
    const int nf = mesh_.num_faces();
    FieldResult best;
    best.mu_a = mu_a_;
    best.mu_s = mu_s();
    double best_delta = std::numeric_limits<double>::infinity();

    CurlQpOptions qp;
    qp.s_low = config_.s_low;
    qp.s_high = config_.s_high;
    qp.density_reg = config_.density_reg;
    qp.scale_weights = masses_.face;
    qp.tolerance = config_.qp_tolerance;
    std::vector<signed char> warm;

    using Config = std::vector<std::pair<int, double>>;
    std::vector<Config> history;
    int oscillating = 0;

    std::vector<IterationRecord> log;
    Eigen::VectorXcd Gamma = init_field();
    StopReason stop = StopReason::max_iterations;
    int k = 1;
    for (; k <= config_.max_iterations; ++k) {
        IterationRecord rec;
        rec.iteration = k;
        rec.omega_s = config_.omega_s * std::pow(0.5, (k - 1) / config_.halving_period);

        const Eigen::VectorXcd Ga = align(Gamma);
        const Eigen::VectorXcd Gs = smooth(Ga, rec.omega_s);
        const Eigen::VectorXcd Gu = normalize_field(Gs, Gamma, &rec.zero_norm_faces);
        rec.E_a_before = alignment_energy(Gamma, rulings_.w, masses_.face, rulings_.R_perp);
        rec.E_a_aligned = alignment_energy(Ga, rulings_.w, masses_.face, rulings_.R_perp);
        rec.E_s_aligned = smoothness_energy(L2_, Ga);
        rec.E_s_smoothed = smoothness_energy(L2_, Gs);

        RawField raw = local_raw_representation(mesh_, frames_, ops_, masses_, Gu, config_.crease_curl);
        const Eigen::VectorXd gd = project_div_free(raw, raw.gamma, config_.linear_tolerance);
        CurlQpResult qr = project_curl_free(raw.C, gd, qp, warm.empty() ? nullptr : &warm);
        warm = qr.active;

        Eigen::VectorXcd next(nf);
        for (int f = 0; f < nf; ++f) {
            const cplx z(qr.gamma(2 * f), qr.gamma(2 * f + 1));
            next(f) = z * z;
        }
        rec.max_delta = (next - Gamma).cwiseAbs().maxCoeff();
        rec.E_a = alignment_energy(next, rulings_.w, masses_.face, rulings_.R_perp);
        rec.E_s = smoothness_energy(L2_, next);
        rec.E_d = gl_energy(raw, masses_, gd, config_.gl_epsilon);
        rec.singularities = static_cast<int>(raw.singular_vertices.size());
        rec.max_div = raw.D.rows() ? (raw.D * gd).cwiseAbs().maxCoeff() : 0.0;
        rec.max_curl = qr.max_curl;
        rec.s_min = qr.s.minCoeff();
        rec.s_max = qr.s.maxCoeff();
        rec.qp_iterations = qr.iterations;
        rec.qp_kkt = qr.kkt_residual;
        log.push_back(rec);
        Gamma = next;

        Config cfg;
        for (int v : raw.singular_vertices) cfg.emplace_back(v, raw.index(v));
        history.push_back(cfg);
        const size_t h = history.size();
        if (h >= 3 && history[h - 1] == history[h - 3] && history[h - 1] != history[h - 2])
            ++oscillating;
        else
            oscillating = 0;

        const bool improved = rec.max_delta < best_delta;
        if (improved || on_iteration) {
            FieldResult cur;
            cur.Gamma = next;
            cur.raw = std::move(raw);
            cur.gamma_d = gd;
            cur.gamma_c = qr.gamma;
            cur.s = qr.s;
            cur.iterations = k;
            cur.best_iteration = k;
            cur.mu_a = mu_a_;
            cur.mu_s = best.mu_s;
            if (on_iteration) on_iteration(rec, cur);
            if (improved) {
                best_delta = rec.max_delta;
                best = std::move(cur);
            }
        }
        log_debug("iteration " + std::to_string(k) + " max dGamma " + std::to_string(rec.max_delta) + " singularities " +
                  std::to_string(rec.singularities));
        if (rec.max_delta < config_.tolerance) {
            stop = StopReason::converged;
            break;
        }
        if (oscillating > config_.oscillation_window) {
            stop = StopReason::oscillating;
            break;
        }
    }
    best.log = std::move(log);
    best.stop = stop;
    best.iterations = std::min(k, config_.max_iterations);
    return best;
}

// ---------------------------------------------------------------------------

void write_iteration_log(const std::filesystem::path& path, const std::vector<IterationRecord>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(10);
    out << "iteration,max_delta,E_a,E_s,E_d,singularities,max_div,max_curl,omega_s,s_min,s_max,qp_iterations\n";
    for (const auto& r : log)
        out << r.iteration << ',' << r.max_delta << ',' << r.E_a << ',' << r.E_s << ',' << r.E_d << ','
            << r.singularities << ',' << r.max_div << ',' << r.max_curl << ',' << r.omega_s << ',' << r.s_min << ','
            << r.s_max << ',' << r.qp_iterations << '\n';
}

void write_field_csv(const std::filesystem::path& path, const LocalFrames& frames, const FieldResult& result) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "face,gx,gy,gz,s,Gamma_re,Gamma_im\n";
    const Eigen::MatrixX3d g = to_world_field(frames, result.gamma_c);
    for (Eigen::Index f = 0; f < g.rows(); ++f)
        out << f << ',' << g(f, 0) << ',' << g(f, 1) << ',' << g(f, 2) << ',' << result.s(f) << ','
            << result.Gamma(f).real() << ',' << result.Gamma(f).imag() << '\n';
}

void write_singularities_csv(const std::filesystem::path& path, const TriMesh& mesh, const RawField& raw) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(12);
    out << "vertex,x,y,z,index\n";
    for (int v : raw.singular_vertices)
        out << v << ',' << mesh.V(v, 0) << ',' << mesh.V(v, 1) << ',' << mesh.V(v, 2) << ',' << raw.index(v) << '\n';
}

}  // namespace pqstrip
