#include "pqstrip/pipeline.hpp"

#include "pqstrip/log.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pqstrip {

TriMesh load_input(const RunConfig& config) {
    if (config.input.empty()) throw ConfigError("no input mesh given");
    std::optional<std::filesystem::path> creases;
    if (!config.creases.empty()) creases = config.creases;
    return load_mesh(config.input, creases);
}

PreparedMesh prepare_mesh(const TriMesh& input, const RunConfig& config) {
    PreparedMesh out;
    TriMesh mesh = input;
    if (config.detect_creases) {
        std::vector<int> creases = mesh.crease_edge_list();
        const std::vector<int> found = detect_creases(mesh, config.crease_threshold);
        const size_t before = creases.size();
        creases.insert(creases.end(), found.begin(), found.end());
        std::sort(creases.begin(), creases.end());
        creases.erase(std::unique(creases.begin(), creases.end()), creases.end());
        if (creases.size() != before) {
            log_info("detected " + std::to_string(creases.size() - before) + " crease edges");
            mesh = with_crease_edges(mesh, creases);
        }
    }
    if (config.auto_apex) {
        ApexOptions apex;
        apex.auto_detect = true;
        apex.defect_threshold = config.apex_threshold;
        mesh = preprocess_apexes(mesh, apex);
    }
    mesh = split_open_creases(mesh);
    out.origin = mesh.V.colwise().minCoeff().transpose();
    out.unscaled_V = mesh.V;
    out.scale = normalize_bbox(mesh);
    out.mesh = std::move(mesh);
    return out;
}

std::unique_ptr<ComponentRun> run_component(TriMesh mesh, const RunConfig& config, bool field_only) {
    auto run = std::make_unique<ComponentRun>();
    run->mesh = std::move(mesh);
    run->frames = build_frames(run->mesh);
    run->masses = build_masses(run->mesh);
    run->ops = build_operators(run->mesh, run->frames, run->masses);
    run->rulings = estimate_rulings(run->mesh, run->frames, config.confidence);
    FieldOptimizer opt(run->mesh, run->frames, run->masses, run->ops, run->rulings, config.optimizer);
    run->field = opt.optimize();
    if (field_only) return run;

    const bool sync = config.optimizer.crease_curl;
    run->cut = build_cut(run->mesh, run->field.raw, sync);
    run->rho = resolution_for_strips(run->mesh, run->ops, run->masses, run->cut, run->field.raw, run->field.gamma_c,
                                     config.strips);
    IntegrationOptions io;
    io.residual_warning = config.residual_warning;
    run->u = integrate_u(run->mesh, run->ops, run->masses, run->cut, run->field.raw, run->field.gamma_c, run->rho, io);
    run->traced = trace_levels(run->mesh, run->u);
    run->collapsed = collapse_valence2(run->traced);
    run->poly = assemble_polymesh(run->mesh, run->u, run->cut, run->collapsed, run->field.raw, run->rulings.w,
                                  config.meshing);
    return run;
}

namespace {

std::vector<std::unique_ptr<ComponentRun>> run_all(const PreparedMesh& prepared, const RunConfig& config,
                                                   bool field_only) {
    std::vector<std::unique_ptr<ComponentRun>> runs;
    std::vector<MeshComponent> parts = split_components(prepared.mesh);
    for (size_t i = 0; i < parts.size(); ++i) {
        if (parts.size() > 1)
            log_info("component " + std::to_string(i) + ": " + std::to_string(parts[i].mesh.num_faces()) + " faces");
        auto run = run_component(std::move(parts[i].mesh), config, field_only);
        run->vertex_map = std::move(parts[i].vertex_map);
        runs.push_back(std::move(run));
    }
    return runs;
}

}  // namespace

std::vector<std::unique_ptr<ComponentRun>> optimize_fields(const TriMesh& input, const RunConfig& config) {
    return run_all(prepare_mesh(input, config), config, true);
}

RemeshResult remesh(const TriMesh& input, const RunConfig& config) {
    RemeshResult result;
    result.prepared = prepare_mesh(input, config);
    result.components = run_all(result.prepared, config, false);

    // merge component polygon meshes
    PolyMesh& out = result.output;
    std::vector<Eigen::Vector3d> verts;
    for (const auto& run : result.components) {
        const PolyMesh& p = run->poly;
        const int offset = static_cast<int>(verts.size());
        for (int v = 0; v < p.num_vertices(); ++v) {
            verts.push_back(p.V.row(v));
            out.source_vertex.push_back(p.source_vertex[v] < 0 ? -1 : run->vertex_map[p.source_vertex[v]]);
        }
        for (int f = 0; f < p.num_faces(); ++f) {
            std::vector<int> face = p.faces[f];
            for (int& v : face) v += offset;
            out.faces.push_back(std::move(face));
            out.kind.push_back(p.kind[f]);
            out.levels.push_back(p.levels[f]);
            out.has_closed_level.push_back(p.has_closed_level[f]);
            out.source_faces.push_back(p.source_faces[f]);
        }
        out.dropped_slivers += p.dropped_slivers;
    }
    out.V.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) out.V.row(static_cast<Eigen::Index>(i)) = verts[i];

    // report, measured in normalized units
    QualityReport& r = result.report;
    const TriMesh& prepared = result.prepared.mesh;
    const double diagonal = bbox_diagonal(prepared.V);
    r.config = config.serialize();
    r.faces = out.num_faces();
    r.vertices = out.num_vertices();
    r.converged = true;
    std::set<std::string> reasons;
    for (const auto& run : result.components) {
        r.iterations = std::max(r.iterations, run->field.iterations);
        r.converged = r.converged && run->field.converged();
        reasons.insert(to_string(run->field.stop));
        for (int v : run->field.raw.singular_vertices) r.singular_vertices.push_back(run->vertex_map[v]);
        r.chord_deviation =
            std::max(r.chord_deviation, 100.0 * chord_deviation(run->mesh, run->traced, run->rulings.w) / diagonal);
        r.chord_crossings += count_chord_crossings(run->collapsed, diagonal);
    }
    for (const auto& s : reasons) r.stop_reason += (r.stop_reason.empty() ? "" : ",") + s;
    for (PolyFaceKind k : out.kind) (k == PolyFaceKind::strip ? r.strip_faces : r.planar_faces) += 1;
    if (out.num_faces() > 0) {
        const PlanarityStats ps = planarity(out.V, out.faces);
        r.p_max = ps.max;
        r.p_mean = ps.mean;
        const HausdorffResult h =
            hausdorff_relative(soup_of(prepared.V, prepared.F), soup_of(out.V, out.faces), diagonal, config.hausdorff_samples);
        r.h = h.h;
        r.hausdorff_samples = h.samples;
    } else {
        log_warn("remeshing produced no polygons");
    }
    if (r.chord_crossings > 0) log_warn("level chords cross " + std::to_string(r.chord_crossings) + " times");

    // back to input coordinates
    const Eigen::RowVector3d origin = result.prepared.origin.transpose();
    for (Eigen::Index v = 0; v < out.V.rows(); ++v) {
        if (out.source_vertex[v] >= 0)
            out.V.row(v) = result.prepared.unscaled_V.row(out.source_vertex[v]);
        else
            out.V.row(v) = origin + (out.V.row(v) - origin) / result.prepared.scale;
    }
    return result;
}

}  // namespace pqstrip
