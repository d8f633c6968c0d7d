// Exercises the command-line binary end to end: exit codes, output files,
// and the verify-metric surface. Runs the real executable via std::system.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(CENTORE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

fs::path temp_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "centore_cli_tests" / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

} // namespace

TEST_CASE("run: bundled euclid_affine scenario exits zero and writes outputs") {
    const fs::path out = temp_dir("euclid");
    const std::string config = std::string(CENTORE_SCENARIO_DIR) + "/euclid_affine.cfg";
    CHECK(run_cli("run " + config + " --out " + out.string() + " --threads 2") == 0);
    for (const char* name :
         {"report.json", "decay_fits.csv", "field_u.csv", "field_grad.csv"}) {
        CHECK(fs::exists(out / name));
    }
}

TEST_CASE("run: validation failure exits 2 and names the constraint") {
    const fs::path dir = temp_dir("badconfig");
    const fs::path cfg = dir / "bad.cfg";
    write_file(cfg, "domain.resolution = 7\n");
    CHECK(run_cli("run " + cfg.string()) == 2);

    // unknown metric also exits 2
    const fs::path cfg2 = dir / "badmetric.cfg";
    write_file(cfg2, "target.metric = warp_drive\n");
    CHECK(run_cli("run " + cfg2.string()) == 2);

    // missing file
    CHECK(run_cli("run " + (dir / "missing.cfg").string()) == 2);
}

TEST_CASE("verify-metric: valid metrics exit zero, degenerate Randers does not") {
    CHECK(run_cli("verify-metric euclidean") == 0);
    CHECK(run_cli("verify-metric randers --param 'b=(0.5,0)'") == 0);
    CHECK(run_cli("verify-metric randers --param 'b=(1.1,0)'") != 0);
    CHECK(run_cli("verify-metric nonsense") == 2);
}

TEST_CASE("verify-metric: JSON side output") {
    const fs::path dir = temp_dir("verify_json");
    const fs::path json = dir / "euclid.json";
    CHECK(run_cli("verify-metric euclidean --json " + json.string()) == 0);
    CHECK(fs::exists(json));
    std::ifstream in(json);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("homogeneity_deviation_analytic") != std::string::npos);
}

TEST_CASE("run: environment variable overrides the output directory") {
    const fs::path out = temp_dir("env_out");
    const std::string config = std::string(CENTORE_SCENARIO_DIR) + "/euclid_affine.cfg";
    const std::string cmd = "CENTORE_OUT=" + out.string() + " " + CENTORE_CLI_PATH + " run " +
                            config + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(out / "report.json"));
}
