#pragma once

#include "pqstrip/config.hpp"
#include "pqstrip/curvature.hpp"
#include "pqstrip/field.hpp"
#include "pqstrip/geometry.hpp"
#include "pqstrip/integration.hpp"
#include "pqstrip/meshing.hpp"
#include "pqstrip/metrics.hpp"
#include "pqstrip/operators.hpp"

#include <memory>
#include <vector>

namespace pqstrip {

/// Everything computed on one connected component. Held by pointer since
/// the optimizer keeps references into it.
struct ComponentRun {
    TriMesh mesh;
    std::vector<int> vertex_map;  // local -> prepared input vertex
    LocalFrames frames;
    MassMatrices masses;
    DiscreteOperators ops;
    RulingData rulings;
    FieldResult field;
    CutGraph cut;
    double rho = 0.0;
    SeamlessField u;
    LevelSetNetwork traced;
    LevelSetNetwork collapsed;
    PolyMesh poly;
};

/// Apex removal, creases (file pairs plus detection, open ones split) and
/// unit bbox normalization. `scale` and `origin` undo the normalization.
struct PreparedMesh {
    TriMesh mesh;
    double scale = 1.0;
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::MatrixX3d unscaled_V;  // vertices before normalization
};
PreparedMesh prepare_mesh(const TriMesh& input, const RunConfig& config);

/// Field optimization on one component; with `field_only` nothing after it.
std::unique_ptr<ComponentRun> run_component(TriMesh mesh, const RunConfig& config, bool field_only = false);

struct RemeshResult {
    PreparedMesh prepared;
    std::vector<std::unique_ptr<ComponentRun>> components;
    PolyMesh output;  // in input coordinates
    QualityReport report;
    bool converged() const { return report.converged; }
};

RemeshResult remesh(const TriMesh& input, const RunConfig& config);

/// Field stage only, per component.
std::vector<std::unique_ptr<ComponentRun>> optimize_fields(const TriMesh& input, const RunConfig& config);

/// Input mesh named by the config (plus its crease file).
TriMesh load_input(const RunConfig& config);

}  // namespace pqstrip
