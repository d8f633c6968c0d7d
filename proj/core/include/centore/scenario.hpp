#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

// vendored single-header nlohmann/json
#include "json.hpp"

#include "centore/config.hpp"
#include "centore/diagnostics.hpp"

namespace centore {

/// Command-line / environment overrides applied on top of a ScenarioConfig.
struct RunOptions {
    std::string out_dir;                 // --out; empty means unset
    std::string out_dir_env;             // value of the output-dir env var, if set
    std::optional<std::uint64_t> seed;   // --seed
    int threads = 1;
};

/// Batch structural verification of one metric.
struct MetricVerification {
    bool has_analytic = false;
    double homogeneity_analytic = 0.0;
    double homogeneity_fd = 0.0;
    double euler_analytic = 0.0;
    double euler_fd = 0.0;
    ConvexityBounds bounds;
    ModulusFit modulus;
    std::optional<std::pair<double, double>> declared_bounds;
    std::optional<std::pair<double, double>> declared_modulus;
};

/// Runs the homogeneity, Euler, convexity and modulus checks over a seeded
/// sample budget. Propagates ConvexityViolation for degenerate metrics.
MetricVerification verify_metric(const FinslerStructure& F, int sample_budget,
                                 std::uint64_t seed);

nlohmann::ordered_json verification_to_json(const MetricVerification& v);

/// Name of the environment variable that may override the output directory.
inline constexpr const char* kOutDirEnvVar = "CENTORE_OUT";

struct RunReport {
    nlohmann::ordered_json json;
    std::filesystem::path output_dir;
    bool solver_converged = false;
};

/// Runs a full scenario: build, verify, minimize, diagnose, and persist
/// report.json, decay_fits.csv, field_u.csv and field_grad.csv under the
/// resolved output directory. Throws ConfigError on validation failures and
/// StagnationError when the solver cannot make progress.
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts);
RunReport run_scenario_file(const std::string& config_path, const RunOptions& opts);

} // namespace centore
