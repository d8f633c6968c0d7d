// Scenario-driven experiment runner: minimize the Centore energy of a
// configured scenario and emit machine-readable reports, or verify the
// structural identities of a single metric.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "centore/errors.hpp"
#include "centore/registry.hpp"
#include "centore/scenario.hpp"
#include "centore/version.hpp"

namespace {

centore::ParamMap parse_params(const std::vector<std::string>& raw) {
    centore::ParamMap params;
    for (const std::string& kv : raw) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw centore::ConfigError("--param expects key=value, got '" + kv + "'");
        std::string value = kv.substr(eq + 1);
        // tolerate b=(0.5,0) style parentheses
        if (value.size() >= 2 && value.front() == '(' && value.back() == ')')
            value = value.substr(1, value.size() - 2);
        params[kv.substr(0, eq)] = value;
    }
    return params;
}

int run_command(const std::string& config_path, const std::string& out_dir,
                const std::optional<std::uint64_t>& seed, int threads) {
    centore::RunOptions opts;
    opts.out_dir = out_dir;
    if (const char* env = std::getenv(centore::kOutDirEnvVar)) opts.out_dir_env = env;
    opts.seed = seed;
    opts.threads = threads;

    const centore::RunReport report = centore::run_scenario_file(config_path, opts);
    std::cout << "report written to " << (report.output_dir / "report.json").string() << "\n";
    std::cout << "solver " << (report.solver_converged ? "converged" : "did not converge")
              << "\n";
    return 0;
}

int verify_command(const std::string& metric_name, const std::vector<std::string>& raw_params,
                   int samples, std::uint64_t seed, const std::string& json_path) {
    const centore::ParamMap params = parse_params(raw_params);
    const auto metric = centore::make_target_metric(metric_name, params);
    const centore::MetricVerification v = centore::verify_metric(*metric, samples, seed);

    std::printf("metric: %s\n", metric->name().c_str());
    if (v.has_analytic) {
        std::printf("  homogeneity deviation (analytic) : %.3e\n", v.homogeneity_analytic);
        std::printf("  euler deviation (analytic)       : %.3e\n", v.euler_analytic);
    }
    std::printf("  homogeneity deviation (fd)       : %.3e\n", v.homogeneity_fd);
    std::printf("  euler deviation (fd)             : %.3e\n", v.euler_fd);
    std::printf("  lambda_min / lambda_max          : %.6f / %.6f  (%ld samples)\n",
                v.bounds.lambda_min, v.bounds.lambda_max, v.bounds.sample_count);
    if (v.declared_bounds)
        std::printf("  declared bounds                  : %.6f / %.6f\n",
                    v.declared_bounds->first, v.declared_bounds->second);
    if (v.modulus.sigma_defined)
        std::printf("  modulus fit                      : c_omega %.4e, sigma %.4f\n",
                    v.modulus.c_omega, v.modulus.sigma);
    else
        std::printf("  modulus fit                      : c_omega %.4e, sigma undefined\n",
                    v.modulus.c_omega);
    if (v.declared_modulus)
        std::printf("  declared modulus                 : c_omega %.4e, sigma %.4f\n",
                    v.declared_modulus->first, v.declared_modulus->second);

    if (!json_path.empty()) {
        nlohmann::ordered_json j;
        j["version"] = centore::kVersion;
        j["metric"] = metric->name();
        j["verification"] = centore::verification_to_json(v);
        std::ofstream out(json_path);
        out << j.dump(2) << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Centore energy minimization and regularity diagnostics"};
    app.set_version_flag("--version", centore::kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 2;
    CLI::App* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "path to the scenario config")->required();
    run->add_option("--out", out_dir, "output directory (overrides config and env)");
    run->add_option("--seed", seed, "seed override");
    run->add_option("--threads", threads, "assembly threads")->check(CLI::PositiveNumber);

    std::string metric_name, json_path;
    std::vector<std::string> raw_params;
    int samples = 400;
    std::uint64_t verify_seed = 1;
    CLI::App* verify = app.add_subcommand("verify-metric", "verify structural identities");
    verify->add_option("name", metric_name, "registered metric name")->required();
    verify->add_option("--param", raw_params, "metric parameter key=value (repeatable)");
    verify->add_option("--samples", samples, "sample budget");
    verify->add_option("--seed", verify_seed, "sample seed");
    verify->add_option("--json", json_path, "also write the table as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, out_dir, seed, threads);
        if (verify->parsed())
            return verify_command(metric_name, raw_params, samples, verify_seed, json_path);
    } catch (const centore::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const centore::StagnationError& e) {
        std::cerr << "solver stagnation: " << e.what() << "\n";
        return 3;
    } catch (const centore::ConvexityViolation& e) {
        std::cerr << "convexity violation: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
