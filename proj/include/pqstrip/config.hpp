#pragma once

#include "pqstrip/curvature.hpp"
#include "pqstrip/field.hpp"
#include "pqstrip/meshing.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace pqstrip {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every knob of a remeshing run. Flat "key = value" text with '#' comments.
struct RunConfig {
    std::string input;
    std::string creases;  // crease pair file, optional
    std::string output;
    std::string report;

    ConfidenceParams confidence;
    OptimizerConfig optimizer;
    MeshingOptions meshing;

    int strips = 20;                 // requested strip count per component
    bool auto_apex = false;
    double apex_threshold = 0.2;     // angle defect, radians
    bool detect_creases = true;
    double crease_threshold = 0.5;   // dihedral deviation, radians
    double residual_warning = 0.1;
    int hausdorff_samples = 100000;

    /// Applies one key; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    std::string serialize() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace pqstrip
