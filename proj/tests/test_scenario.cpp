#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "centore/errors.hpp"
#include "centore/scenario.hpp"

using namespace centore;
namespace fs = std::filesystem;

namespace {

const char* kSmallScenario = R"(
# compact scenario used by the library tests
domain.resolution = 33
domain.metric = euclidean
target.metric = riemannian_u
target.eps = 0.2
boundary.name = sine_warp
quadrature.circle_nodes = 32
solver.max_iterations = 2000
solver.gradient_tolerance = 1e-7
diagnostics.probes = 0.5,0.5; 0.5,0
diagnostics.ladder_count = 3
diagnostics.q = 2.5
diagnostics.holder = false
output.dir = unused
seed = 3
verification.samples = 64
)";

fs::path temp_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "centore_tests" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

nlohmann::ordered_json strip_timings(nlohmann::ordered_json j) {
    j.erase("timings");
    return j;
}

} // namespace

TEST_CASE("config parser: comments, whitespace, duplicates, malformed lines") {
    const KeyValues kv = parse_config_text("a.b = 1 # trailing\n\n# full comment\n c = x y \n");
    CHECK(kv.at("a.b") == "1");
    CHECK(kv.at("c") == "x y");
    CHECK_THROWS_AS(parse_config_text("novalue\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
}

TEST_CASE("scenario config validation") {
    const ScenarioConfig cfg = ScenarioConfig::from_keyvalues(parse_config_text(kSmallScenario));
    CHECK(cfg.resolution == 33);
    CHECK(cfg.target_params.at("eps") == "0.2");
    CHECK(cfg.solver.gradient_tolerance == 1e-7);
    CHECK(cfg.probes.size() == 2);
    CHECK_FALSE(cfg.run_holder);

    auto expect_config_error = [](const std::string& text) {
        CHECK_THROWS_AS(ScenarioConfig::from_keyvalues(parse_config_text(text)), ConfigError);
    };
    // the N >= 9 floor is named in the message
    try {
        ScenarioConfig::from_keyvalues(parse_config_text("domain.resolution = 7\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("N >= 9") != std::string::npos);
    }
    expect_config_error("target.metric = warp_drive\n");
    expect_config_error("diagnostics.q = 3.5\n");
    expect_config_error("unknown.key = 1\n");
    expect_config_error("target.metric = randers\ntarget.bogus = 1\n");

    // unknown metric error lists the registry
    try {
        ScenarioConfig::from_keyvalues(parse_config_text("target.metric = warp_drive\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("randers") != std::string::npos);
    }
}

TEST_CASE("default probe roster: center, off-center interior, edge midpoints") {
    const ScenarioConfig cfg;
    const auto probes = cfg.resolved_probes();
    REQUIRE(probes.size() == 9);
    int boundary = 0;
    for (const auto& p : probes)
        if (p(0) == 0.0 || p(0) == 1.0 || p(1) == 0.0 || p(1) == 1.0) ++boundary;
    CHECK(boundary == 4);
    CHECK(probes[0] == Eigen::Vector2d(0.5, 0.5));
}

TEST_CASE("verify_metric flags convexity violations with the offending sample") {
    const auto bad = make_target_metric("randers", {{"b", "1.1,0"}});
    try {
        verify_metric(*bad, 64, 1);
        FAIL("expected ConvexityViolation");
    } catch (const ConvexityViolation& e) {
        CHECK(std::string(e.what()).find("u =") != std::string::npos);
    }
}

TEST_CASE("run_scenario produces a structurally complete report") {
    const ScenarioConfig cfg = ScenarioConfig::from_keyvalues(parse_config_text(kSmallScenario));
    RunOptions opts;
    opts.out_dir = temp_dir("report").string();
    opts.threads = 2;

    const RunReport report = run_scenario(cfg, opts);
    CHECK(report.solver_converged);

    const auto& j = report.json;
    CHECK(j.contains("version"));
    CHECK(j.contains("config"));
    CHECK(j.contains("structural_verification"));
    CHECK(j.contains("solve"));
    CHECK(j.contains("diagnostics"));
    CHECK(j.contains("timings"));
    CHECK(j["solve"]["energy_history_nonincreasing"].get<bool>());

    // every requested diagnostic appears for every probe
    REQUIRE(j["diagnostics"]["probes"].size() == 2);
    for (const auto& probe : j["diagnostics"]["probes"]) {
        for (const char* key :
             {"dirichlet_growth", "campanato", "caccioppoli", "reverse_holder",
              "frozen_comparison"}) {
            CHECK(probe.contains(key));
        }
    }
    // boundary probe carries skip reasons for the interior-only diagnostics
    const auto& boundary_probe = j["diagnostics"]["probes"][1];
    CHECK(boundary_probe["boundary"].get<bool>());
    CHECK(boundary_probe["campanato"].contains("skipped"));

    // all four files exist
    for (const char* name :
         {"report.json", "decay_fits.csv", "field_u.csv", "field_grad.csv"}) {
        CHECK(fs::exists(report.output_dir / name));
    }

    // decay_fits.csv: header plus probes x diagnostics x ladder rows
    std::ifstream csv(report.output_dir / "decay_fits.csv");
    std::string line;
    int rows = -1; // header
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2 * 5 * 3);
}

TEST_CASE("identical configs reproduce report.json except the timing block") {
    const ScenarioConfig cfg = ScenarioConfig::from_keyvalues(parse_config_text(kSmallScenario));

    RunOptions opts1;
    opts1.out_dir = temp_dir("repro1").string();
    opts1.threads = 1;
    RunOptions opts2;
    opts2.out_dir = temp_dir("repro2").string();
    opts2.threads = 2; // thread count must not affect the payload

    const RunReport r1 = run_scenario(cfg, opts1);
    const RunReport r2 = run_scenario(cfg, opts2);

    auto j1 = strip_timings(r1.json);
    auto j2 = strip_timings(r2.json);
    // output dirs differ by construction; everything else must match
    j1["config"].erase("output.dir");
    j2["config"].erase("output.dir");
    CHECK(j1.dump() == j2.dump());

    // byte-identical CSV payloads
    for (const char* name : {"decay_fits.csv", "field_u.csv", "field_grad.csv"}) {
        std::ifstream f1(r1.output_dir / name), f2(r2.output_dir / name);
        std::stringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        CHECK(s1.str() == s2.str());
    }
}

TEST_CASE("seed and output-dir overrides are applied and echoed") {
    const ScenarioConfig cfg = ScenarioConfig::from_keyvalues(parse_config_text(kSmallScenario));
    RunOptions opts;
    opts.out_dir = temp_dir("seeded").string();
    opts.seed = 99;
    const RunReport report = run_scenario(cfg, opts);
    CHECK(report.json["config"]["seed"].get<std::uint64_t>() == 99);
    CHECK(report.json["config"]["seed_source"].get<std::string>() == "cli");
    CHECK(report.json["config"]["output.dir_source"].get<std::string>() == "cli");

    RunOptions env_opts;
    env_opts.out_dir_env = temp_dir("env_dir").string();
    const RunReport env_report = run_scenario(cfg, env_opts);
    CHECK(env_report.json["config"]["output.dir_source"].get<std::string>() == "env");
    CHECK(env_report.output_dir == fs::path(env_opts.out_dir_env));
}

TEST_CASE("boundary data dimension must match the target metric") {
    ScenarioConfig cfg = ScenarioConfig::from_keyvalues(parse_config_text(kSmallScenario));
    cfg.target_params["dim"] = "3";
    RunOptions opts;
    opts.out_dir = temp_dir("dim_mismatch").string();
    CHECK_THROWS_AS(run_scenario(cfg, opts), ConfigError);
}
