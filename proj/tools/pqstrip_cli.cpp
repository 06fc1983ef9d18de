#include "pqstrip/log.hpp"
#include "pqstrip/pipeline.hpp"
#include "pqstrip/synth.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace pqstrip;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

/// One --key option per config key; values override the config file.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
    std::vector<std::string> sets;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", file, "key = value run configuration");
        app->add_option("--set", sets, "extra key=value overrides");
        std::istringstream keys(RunConfig{}.serialize());
        std::string line;
        while (std::getline(keys, line)) {
            const std::string key = line.substr(0, line.find(' '));
            app->add_option("--" + key, values[key], "config key " + key);
        }
    }

    RunConfig resolve() const {
        RunConfig c = file.empty() ? RunConfig{} : load_config(file);
        for (const auto& [key, value] : values)
            if (!value.empty()) c.set(key, value);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            c.set(s.substr(0, eq), s.substr(eq + 1));
        }
        return c;
    }
};

void export_fields(const std::filesystem::path& dir, const std::vector<std::unique_ptr<ComponentRun>>& runs) {
    std::filesystem::create_directories(dir);
    for (size_t i = 0; i < runs.size(); ++i) {
        const ComponentRun& r = *runs[i];
        const std::string p = runs.size() > 1 ? "c" + std::to_string(i) + "_" : "";
        save_mesh(dir / (p + "mesh.obj"), r.mesh);
        write_ruling_csv(dir / (p + "rulings.csv"), r.frames, r.rulings);
        write_field_csv(dir / (p + "field.csv"), r.frames, r.field);
        write_singularities_csv(dir / (p + "singularities.csv"), r.mesh, r.field.raw);
        write_iteration_log(dir / (p + "log.csv"), r.field.log);
        if (r.u.corner_u.rows() > 0) write_u_obj(dir / (p + "u.obj"), r.mesh, r.u);
    }
}

/// Direction columns 1-3 of a per-face CSV with a header line.
Eigen::MatrixX3d read_field_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MeshError("cannot read field " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<Eigen::Vector3d> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() < 4) throw MeshError("field row with fewer than 4 columns in " + path.string());
        rows.emplace_back(cells[1], cells[2], cells[3]);
    }
    Eigen::MatrixX3d F(static_cast<Eigen::Index>(rows.size()), 3);
    for (size_t i = 0; i < rows.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = rows[i];
    return F;
}

int cmd_remesh(const ConfigFlags& flags, const std::string& field_dir) {
    const RunConfig c = flags.resolve();
    if (c.output.empty()) throw ConfigError("no output path given");
    const RemeshResult r = remesh(load_input(c), c);
    write_polymesh(c.output, r.output);
    if (!c.report.empty()) write_report(c.report, r.report);
    if (!field_dir.empty()) export_fields(field_dir, r.components);
    std::cout << "faces " << r.report.faces << " (strip " << r.report.strip_faces << ", planar " << r.report.planar_faces
              << ")  p_max " << r.report.p_max << "%  p_mean " << r.report.p_mean << "%  h " << r.report.h
              << "%  iterations " << r.report.iterations << "  " << r.report.stop_reason << '\n';
    return r.converged() ? kOk : kNotConverged;
}

int cmd_field(const ConfigFlags& flags, const std::string& out_dir) {
    const RunConfig c = flags.resolve();
    const auto runs = optimize_fields(load_input(c), c);
    export_fields(out_dir, runs);
    bool converged = true;
    for (size_t i = 0; i < runs.size(); ++i) {
        const FieldResult& f = runs[i]->field;
        converged = converged && f.converged();
        std::cout << "component " << i << ": " << to_string(f.stop) << " after " << f.iterations << " iterations, "
                  << f.raw.singular_vertices.size() << " singularities\n";
    }
    return converged ? kOk : kNotConverged;
}

struct SynthArgs {
    SynthParams params;
    std::string kind = "cylinder", style = "regular", out, truth, creases;
    double noise = 0.0;
    unsigned noise_seed = 1;
};

int cmd_synth(SynthArgs a) {
    a.params.kind = parse_surface_kind(a.kind);
    a.params.style = parse_triangulation_style(a.style);
    SynthSurface s = generate(a.params);
    if (a.noise > 0) s.mesh = perturb(s.mesh, a.noise, a.noise_seed);
    save_mesh(a.out, s.mesh);
    if (!a.truth.empty()) write_ground_truth_csv(a.truth, s);
    if (!a.creases.empty()) write_crease_file(a.creases, s.mesh);
    std::cout << to_string(a.params.kind) << ": " << s.mesh.num_vertices() << " vertices, " << s.mesh.num_faces()
              << " faces\n";
    return kOk;
}

struct MetricArgs {
    std::string a, b, field_a, field_b, report;
    int samples = 100000;
    bool perpendicular_b = false;
};

int cmd_metrics(const MetricArgs& m) {
    const PolygonSoup A = read_obj(m.a), B = read_obj(m.b);
    if (A.faces.empty() || B.faces.empty()) throw MeshError("metrics: empty mesh");
    QualityReport r;
    const PlanarityStats ps = planarity(B.V, B.faces);
    r.p_max = ps.max;
    r.p_mean = ps.mean;
    r.faces = static_cast<int>(B.faces.size());
    r.vertices = static_cast<int>(B.V.rows());
    const HausdorffResult h =
        hausdorff_relative(soup_of(A.V, A.faces), soup_of(B.V, B.faces), bbox_diagonal(A.V), m.samples);
    r.h = h.h;
    r.hausdorff_samples = h.samples;
    if (!m.field_a.empty() || !m.field_b.empty()) {
        if (m.field_a.empty() || m.field_b.empty()) throw MeshError("metrics: both fields are needed");
        Eigen::MatrixX3d fa = read_field_csv(m.field_a), fb = read_field_csv(m.field_b);
        if (fa.rows() != static_cast<Eigen::Index>(A.faces.size()) || fb.rows() != fa.rows())
            throw MeshError("metrics: field rows do not match the faces of the first mesh");
        Eigen::VectorXd area(fa.rows());
        for (Eigen::Index f = 0; f < fa.rows(); ++f) {
            const auto& face = A.faces[f];
            Eigen::Vector3d n = Eigen::Vector3d::Zero();
            for (size_t k = 1; k + 1 < face.size(); ++k)
                n += (A.V.row(face[k]) - A.V.row(face[0])).transpose().cross((A.V.row(face[k + 1]) - A.V.row(face[0])).transpose());
            area(f) = 0.5 * n.norm();
            if (m.perpendicular_b && n.norm() > 0) fb.row(f) = n.normalized().cross(Eigen::Vector3d(fb.row(f))).transpose();
        }
        const AngularError e = angular_error(fa, fb, area);
        r.has_angular = true;
        r.angular_max = e.max_deg;
        r.angular_mean = e.mean_deg;
    }
    r.converged = true;
    if (!m.report.empty()) write_report(m.report, r);
    std::cout << r.to_json() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* t = std::getenv("DEV2PQ_THREADS")) {
        const int n = std::atoi(t);
        if (n > 0) Eigen::setNbThreads(n);
    }

    CLI::App app{"Remeshing of developable triangle meshes into planar-quad strips"};
    app.require_subcommand(1);
    bool verbose = false, quiet = false;
    app.add_flag("-v,--verbose", verbose, "log progress");
    app.add_flag("-q,--quiet", quiet, "only errors");

    ConfigFlags remesh_flags, field_flags;
    std::string field_dir, field_out = "field_out";
    CLI::App* remesh_cmd = app.add_subcommand("remesh", "field, integration, meshing and metrics");
    remesh_flags.attach(remesh_cmd);
    remesh_cmd->add_option("--field-dir", field_dir, "also export the field snapshot here");

    CLI::App* field_cmd = app.add_subcommand("field", "field optimization only");
    field_flags.attach(field_cmd);
    field_cmd->add_option("-o,--out-dir", field_out, "directory for rulings, field, singularities and log");

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "analytic developable test surface");
    synth_cmd->add_option("-k,--kind", synth.kind, "plane|cylinder|cone|clothoid|composite|creased");
    synth_cmd->add_option("--nu", synth.params.nu, "cells across the rulings");
    synth_cmd->add_option("--nv", synth.params.nv, "cells along the rulings");
    synth_cmd->add_option("--style", synth.style, "regular|flipped|randomized");
    synth_cmd->add_option("--seed", synth.params.seed, "triangulation seed");
    synth_cmd->add_option("--radius", synth.params.radius);
    synth_cmd->add_option("--length", synth.params.length);
    synth_cmd->add_option("--width", synth.params.width);
    synth_cmd->add_option("--flap-width", synth.params.flap_width);
    synth_cmd->add_option("--sweep", synth.params.sweep);
    synth_cmd->add_option("--half-angle", synth.params.half_angle);
    synth_cmd->add_option("--slant-min", synth.params.slant_min);
    synth_cmd->add_option("--slant-max", synth.params.slant_max);
    synth_cmd->add_flag("--apex", synth.params.apex);
    synth_cmd->add_option("--kappa0", synth.params.kappa0);
    synth_cmd->add_option("--kappa-rate", synth.params.kappa_rate);
    synth_cmd->add_option("--fold-angle", synth.params.fold_angle);
    synth_cmd->add_option("--noise", synth.noise, "vertex perturbation, fraction of the mean edge length");
    synth_cmd->add_option("--noise-seed", synth.noise_seed);
    synth_cmd->add_option("-o,--out", synth.out, "mesh OBJ")->required();
    synth_cmd->add_option("--truth", synth.truth, "ground-truth ruling CSV");
    synth_cmd->add_option("--creases", synth.creases, "crease pair file");

    MetricArgs metrics;
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "compare two meshes (and optional per-face fields)");
    metrics_cmd->add_option("a", metrics.a, "reference mesh")->required();
    metrics_cmd->add_option("b", metrics.b, "evaluated mesh (planarity is measured on it)")->required();
    metrics_cmd->add_option("--field-a", metrics.field_a, "per-face field of the reference mesh, CSV");
    metrics_cmd->add_option("--field-b", metrics.field_b, "field compared against it, same faces");
    metrics_cmd->add_flag("--perpendicular-b", metrics.perpendicular_b, "rotate field b by 90 degrees in the face");
    metrics_cmd->add_option("--samples", metrics.samples, "Hausdorff samples per side");
    metrics_cmd->add_option("--report", metrics.report, "JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }
    set_log_level(quiet ? LogLevel::quiet : verbose ? LogLevel::info : LogLevel::warn);

    try {
        if (*remesh_cmd) return cmd_remesh(remesh_flags, field_dir);
        if (*field_cmd) return cmd_field(field_flags, field_out);
        if (*synth_cmd) return cmd_synth(synth);
        if (*metrics_cmd) return cmd_metrics(metrics);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInputError;
    }
    return kOk;
}
