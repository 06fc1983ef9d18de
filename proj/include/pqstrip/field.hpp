#pragma once

#include "pqstrip/curl_qp.hpp"
#include "pqstrip/curvature.hpp"
#include "pqstrip/geometry.hpp"
#include "pqstrip/mesh.hpp"
#include "pqstrip/operators.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pqstrip {

using SpMatC = Eigen::SparseMatrix<cplx>;

struct OptimizerConfig {
    double omega_a = 0.1;
    double omega_s = 0.005;
    int halving_period = 30;
    double tolerance = 1e-3;
    int max_iterations = 300;
    double s_low = 0.4;
    double s_high = 1.6;
    double density_reg = 1e-3;
    double qp_tolerance = 1e-6;
    double linear_tolerance = 1e-8;
    double weight_zero_tolerance = 1e-8;  // weights at or below count as zero for mu_a
    double gl_epsilon = 0.1;              // reporting only
    int oscillation_window = 10;
    bool crease_curl = false;  // keep the curl constraint across crease edges (level sync)
};

/// Combed raw field extracted from a unit power field, with the
/// matching-aware divergence and curl rows.
struct RawField {
    Eigen::VectorXd gamma;              // interleaved 2F
    std::vector<signed char> matching;  // per edge: +-1 interior, 0 boundary
    Eigen::VectorXd index;              // per vertex, multiples of 1/2; 0 where undefined
    std::vector<int> singular_vertices;
    std::vector<int> working_vertices;  // V*
    SpMat D;                            // |V*| x 2F
    SpMat C;                            // (#constrained interior edges) x 2F
    std::vector<int> curl_edges;        // row of C -> edge
};

enum class StopReason { converged, max_iterations, oscillating };
std::string to_string(StopReason reason);

struct IterationRecord {
    int iteration = 0;
    double max_delta = 0.0;
    double E_a = 0.0;
    double E_s = 0.0;
    double E_d = 0.0;
    int singularities = 0;
    double max_div = 0.0;
    double max_curl = 0.0;
    double omega_s = 0.0;
    double s_min = 0.0;
    double s_max = 0.0;
    int qp_iterations = 0;
    double qp_kkt = 0.0;
    // energies around the two implicit steps
    double E_a_before = 0.0;
    double E_a_aligned = 0.0;
    double E_s_aligned = 0.0;
    double E_s_smoothed = 0.0;
    int zero_norm_faces = 0;
};

struct FieldResult {
    Eigen::VectorXcd Gamma;   // power field of the returned iterate, gamma_c^2
    RawField raw;             // combed unit field of that iterate
    Eigen::VectorXd gamma_d;  // divergence-free projection
    Eigen::VectorXd gamma_c;  // curl-free scaled field (integrable)
    Eigen::VectorXd s;        // density
    std::vector<IterationRecord> log;
    StopReason stop = StopReason::max_iterations;
    int iterations = 0;
    int best_iteration = 0;
    double mu_a = 0.0;
    double mu_s = 0.0;
    bool converged() const { return stop == StopReason::converged; }
};

// ---- individual steps -------------------------------------------------------

/// Per-face closed form of (I + t W) Ga = G + t W Rp with t = omega_a / mu_a.
/// mu_a <= 0 means all weights vanish: identity.
Eigen::VectorXcd implicit_align(const Eigen::VectorXcd& prev, const Eigen::VectorXd& w, const Eigen::VectorXcd& R_perp,
                                double omega_a, double mu_a);

/// Lowest weight above the zero tolerance, or 0 if none.
double lowest_nonzero_weight(const Eigen::VectorXd& w, double zero_tolerance);

/// L2 = G_E^H M_E (I - W_E) G_E over interior non-crease edges.
SpMatC smoothness_matrix(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses,
                         const Eigen::VectorXd& w);

/// Solves (M_F + (omega_s / mu_s) L2) Gs = M_F Ga.
Eigen::VectorXcd implicit_smooth(const SpMatC& L2, const Eigen::VectorXd& face_mass, const Eigen::VectorXcd& Ga,
                                 double omega_s, double mu_s);

/// Unit modulus per face; faces with |Gs| <= 1e-14 take the unit value of
/// `fallback`. Returns the number of such faces through `replaced`.
Eigen::VectorXcd normalize_field(const Eigen::VectorXcd& Gs, const Eigen::VectorXcd& fallback, int* replaced = nullptr);

/// Square root with the argument halved into (-pi/2, pi/2].
cplx principal_root(cplx z);

RawField local_raw_representation(const TriMesh& mesh, const LocalFrames& frames, const DiscreteOperators& ops,
                                  const MassMatrices& masses, const Eigen::VectorXcd& unit_power, bool crease_curl);
/// Same, from explicit per-face roots (interleaved 2F, any sign choice).
RawField raw_representation_from_roots(const TriMesh& mesh, const LocalFrames& frames, const DiscreteOperators& ops,
                                       const MassMatrices& masses, const Eigen::VectorXd& roots, bool crease_curl);

/// Closest field with D gamma_d = 0 on V*.
Eigen::VectorXd project_div_free(const RawField& raw, const Eigen::VectorXd& gamma_u, double linear_tolerance = 1e-8);

double alignment_energy(const Eigen::VectorXcd& Gamma, const Eigen::VectorXd& w, const Eigen::VectorXd& face_mass,
                        const Eigen::VectorXcd& R_perp);
double smoothness_energy(const SpMatC& L2, const Eigen::VectorXcd& Gamma);
/// Ginzburg-Landau diagnostic: sum_{V*} (D g)^2 / m(v) + eps^-2 sum_f m(f) (|g|^2 - 1)^2.
double gl_energy(const RawField& raw, const MassMatrices& masses, const Eigen::VectorXd& gamma, double epsilon);

// ---- the alternating optimization -------------------------------------------

class FieldOptimizer {
public:
    FieldOptimizer(const TriMesh& mesh, const LocalFrames& frames, const MassMatrices& masses,
                   const DiscreteOperators& ops, const RulingData& rulings, OptimizerConfig config = {});

    Eigen::VectorXcd init_field() const { return rulings_.R_perp; }
    double mu_a() const { return mu_a_; }
    double mu_s();
    const SpMatC& smoothness() const { return L2_; }
    const OptimizerConfig& config() const { return config_; }

    Eigen::VectorXcd align(const Eigen::VectorXcd& prev) const;
    Eigen::VectorXcd smooth(const Eigen::VectorXcd& aligned, double omega_s);

    using Callback = std::function<void(const IterationRecord&, const FieldResult& current)>;
    FieldResult optimize(const Callback& on_iteration = {});

private:
    const TriMesh& mesh_;
    const LocalFrames& frames_;
    const MassMatrices& masses_;
    const DiscreteOperators& ops_;
    const RulingData& rulings_;
    OptimizerConfig config_;
    SpMatC L2_;
    double mu_a_ = 0.0;
    double mu_s_ = -1.0;
    double cached_step_ = -1.0;
    std::unique_ptr<Eigen::SimplicialLDLT<SpMatC>> smooth_solver_;
};

// ---- export ----------------------------------------------------------------

void write_iteration_log(const std::filesystem::path& path, const std::vector<IterationRecord>& log);
/// face, gx, gy, gz (world, gamma_c), s, Gamma_re, Gamma_im
void write_field_csv(const std::filesystem::path& path, const LocalFrames& frames, const FieldResult& result);
/// vertex, x, y, z, index
void write_singularities_csv(const std::filesystem::path& path, const TriMesh& mesh, const RawField& raw);

}  // namespace pqstrip
