#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "centore/minimizer.hpp"
#include "centore/registry.hpp"

namespace centore {

/// Flat `key = value` text with dotted sections; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

/// The ladder diagnostics a scenario can request, in canonical order.
const std::vector<std::string>& ladder_diagnostic_names();

/// Fully resolved scenario description. Construction validates every field
/// and resolves every registry name.
struct ScenarioConfig {
    int resolution = 65;

    std::string source_metric = "euclidean";
    ParamMap source_params;
    std::string target_metric = "euclidean";
    ParamMap target_params;
    std::string boundary_name = "affine";
    ParamMap boundary_params;

    int circle_nodes = 64;
    SolveConfig solver;

    std::vector<Eigen::Vector2d> probes; // empty means the default probe set
    int ladder_count = 4;
    std::vector<double> q_values{2.5};
    std::vector<std::string> diagnostics; // requested ladder diagnostics
    bool run_holder = true;

    std::string output_dir = "out";
    std::uint64_t seed = 0;
    int verification_samples = 200;

    static ScenarioConfig from_keyvalues(const KeyValues& kv);
    static ScenarioConfig from_file(const std::string& path);

    /// The probe list with the default expansion applied: domain center,
    /// four off-center interior points, four edge midpoints.
    std::vector<Eigen::Vector2d> resolved_probes() const;

    /// Echo of the resolved configuration as flat key/value pairs
    /// (deterministic order).
    std::vector<std::pair<std::string, std::string>> echo() const;
};

} // namespace centore
