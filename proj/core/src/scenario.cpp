#include "centore/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "centore/errors.hpp"
#include "centore/version.hpp"

namespace centore {

namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string csv_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ordered_json decay_fit_json(const DecayFit& fit) {
    ordered_json j;
    j["radii"] = fit.radii;
    j["values"] = fit.values;
    j["degenerate"] = fit.degenerate;
    if (!fit.degenerate) {
        j["exponent"] = fit.exponent;
        j["constant"] = fit.constant;
        j["residual"] = fit.residual;
    }
    return j;
}

ordered_json ratio_records_json(const std::vector<RatioRecord>& records) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : records) {
        ordered_json j;
        j["radius"] = r.radius;
        if (r.skipped) {
            j["skipped"] = true;
            j["reason"] = r.reason;
        } else {
            j["value"] = r.value;
        }
        arr.push_back(j);
    }
    return arr;
}

struct ProbeResult {
    Eigen::Vector2d probe;
    bool boundary = false;
    std::vector<double> radii;
    std::string ladder_skip; // nonempty when the whole ladder is infeasible

    std::optional<DecayFit> dirichlet;
    std::string dirichlet_skip;
    std::optional<DecayFit> campanato;
    std::string campanato_skip;
    std::optional<FrozenComparison> frozen;
    std::string frozen_skip;
    std::vector<RatioRecord> caccioppoli;
    std::string caccioppoli_skip;
    std::vector<RatioRecord> reverse_holder;
    std::string reverse_holder_skip;
    std::optional<HolderFit> holder;
    std::string holder_skip;
};

bool on_boundary(const Eigen::Vector2d& p) {
    return p(0) == 0.0 || p(0) == 1.0 || p(1) == 0.0 || p(1) == 1.0;
}

bool requested(const ScenarioConfig& cfg, const std::string& name) {
    return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), name) !=
           cfg.diagnostics.end();
}

ProbeResult run_probe(const ScenarioConfig& cfg, const DiscreteMap& u, const FinslerStructure& F,
                      const SourceMetric& g, const CircleQuadrature& quad,
                      const Eigen::Vector2d& probe, std::uint64_t probe_seed, int threads) {
    ProbeResult result;
    result.probe = probe;
    result.boundary = on_boundary(probe);

    try {
        result.radii = nested_radii(u.grid(), probe, cfg.ladder_count);
    } catch (const Error& e) {
        result.ladder_skip = e.what();
    }

    const std::string interior_only = "interior probes only";
    if (result.radii.empty()) {
        const std::string& why =
            result.ladder_skip.empty() ? interior_only : result.ladder_skip;
        result.dirichlet_skip = why;
        result.campanato_skip = why;
        result.frozen_skip = why;
        result.caccioppoli_skip = why;
        result.reverse_holder_skip = why;
    } else {
        if (requested(cfg, "dirichlet_growth"))
            result.dirichlet = dirichlet_growth_fit(u, probe, result.radii);

        if (requested(cfg, "campanato")) {
            if (result.boundary)
                result.campanato_skip = interior_only;
            else
                result.campanato = campanato_fit(u, probe, result.radii);
        }

        const bool want_frozen = requested(cfg, "frozen_comparison");
        const bool want_ratios =
            requested(cfg, "caccioppoli") || requested(cfg, "reverse_holder");
        std::optional<DiscreteMap> ratio_map;

        if (result.boundary) {
            if (want_frozen) result.frozen_skip = interior_only;
            if (want_ratios) {
                result.caccioppoli_skip = interior_only;
                result.reverse_holder_skip = interior_only;
            }
        } else {
            SolveConfig frozen_cfg = cfg.solver;
            frozen_cfg.threads = threads;
            // The frozen functional is smooth in v even when the energy is
            // rough in u (the u-dependence is frozen at the window mean), so
            // the comparison solves stay tight regardless of the outer stall
            // tolerance; w = u - v must be resolved below the window signal.
            frozen_cfg.gradient_tolerance = std::min(frozen_cfg.gradient_tolerance, 1e-8);
            frozen_cfg.max_iterations = std::max(frozen_cfg.max_iterations, 2000);
            if (want_frozen) {
                result.frozen = frozen_comparison_decay(u, F, g, probe, result.radii, quad,
                                                        frozen_cfg, cfg.q_values.front());
                if (result.frozen->coarsest_v) ratio_map = *result.frozen->coarsest_v;
            }
            if (want_ratios) {
                if (!ratio_map) {
                    const SolveResult solve = frozen_minimize(
                        F, u.grid(), g, make_window(probe, result.radii.front()), u, quad,
                        frozen_cfg);
                    ratio_map = solve.map;
                }
                std::vector<WindowSpec> windows;
                for (double rho : result.radii) windows.push_back(make_window(probe, rho));
                if (requested(cfg, "caccioppoli"))
                    result.caccioppoli = caccioppoli_ratio(*ratio_map, windows);
                if (requested(cfg, "reverse_holder"))
                    result.reverse_holder =
                        reverse_holder_ratio(*ratio_map, windows, cfg.q_values.front());
            }
        }
    }

    if (cfg.run_holder) {
        try {
            result.holder = holder_exponent(u, default_holder_pairs(u.grid(), probe, probe_seed));
        } catch (const ContractViolation& e) {
            result.holder_skip = e.what();
        }
    }
    return result;
}

ordered_json probe_json(const ProbeResult& p) {
    ordered_json j;
    j["x"] = p.probe(0);
    j["y"] = p.probe(1);
    j["boundary"] = p.boundary;
    j["radii"] = p.radii;
    if (!p.ladder_skip.empty()) j["ladder_skip"] = p.ladder_skip;

    auto fit_or_skip = [&j](const char* key, const std::optional<DecayFit>& fit,
                            const std::string& skip) {
        if (fit)
            j[key] = decay_fit_json(*fit);
        else if (!skip.empty())
            j[key] = ordered_json{{"skipped", true}, {"reason", skip}};
    };
    fit_or_skip("dirichlet_growth", p.dirichlet, p.dirichlet_skip);
    fit_or_skip("campanato", p.campanato, p.campanato_skip);

    if (p.frozen) {
        ordered_json f = decay_fit_json(p.frozen->fit);
        ordered_json records = ordered_json::array();
        for (const auto& r : p.frozen->records) {
            ordered_json rec;
            rec["radius"] = r.radius;
            rec["failed"] = r.failed;
            if (r.failed) {
                rec["note"] = r.note;
            } else {
                rec["dw_sq_integral"] = r.dw_sq_integral;
                rec["lq_ratio"] = r.lq_ratio;
                rec["iterations"] = r.iterations;
                rec["converged"] = r.converged;
            }
            records.push_back(rec);
        }
        f["records"] = records;
        j["frozen_comparison"] = f;
    } else if (!p.frozen_skip.empty()) {
        j["frozen_comparison"] = ordered_json{{"skipped", true}, {"reason", p.frozen_skip}};
    }

    if (!p.caccioppoli.empty())
        j["caccioppoli"] = ratio_records_json(p.caccioppoli);
    else if (!p.caccioppoli_skip.empty())
        j["caccioppoli"] = ordered_json{{"skipped", true}, {"reason", p.caccioppoli_skip}};
    if (!p.reverse_holder.empty())
        j["reverse_holder"] = ratio_records_json(p.reverse_holder);
    else if (!p.reverse_holder_skip.empty())
        j["reverse_holder"] = ordered_json{{"skipped", true}, {"reason", p.reverse_holder_skip}};

    if (p.holder) {
        ordered_json h;
        h["beta"] = p.holder->beta;
        h["residual"] = p.holder->residual;
        h["pair_count"] = p.holder->pair_count;
        h["degenerate"] = p.holder->degenerate;
        j["holder"] = h;
    } else if (!p.holder_skip.empty()) {
        j["holder"] = ordered_json{{"skipped", true}, {"reason", p.holder_skip}};
    }
    return j;
}

// decay_fits.csv: exactly probes x requested-diagnostics x ladder rows.
void write_decay_csv(const std::filesystem::path& path, const ScenarioConfig& cfg,
                     const std::vector<ProbeResult>& probes) {
    std::ofstream out(path);
    out << "probe_x,probe_y,diagnostic,radius,value\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& p : probes) {
        for (const std::string& diag : cfg.diagnostics) {
            for (int k = 0; k < cfg.ladder_count; ++k) {
                const double radius =
                    k < static_cast<int>(p.radii.size()) ? p.radii[k] : nan;
                double value = nan;
                if (diag == "dirichlet_growth" && p.dirichlet &&
                    k < static_cast<int>(p.dirichlet->values.size()))
                    value = p.dirichlet->values[k];
                else if (diag == "campanato" && p.campanato &&
                         k < static_cast<int>(p.campanato->values.size()))
                    value = p.campanato->values[k];
                else if (diag == "frozen_comparison" && p.frozen &&
                         k < static_cast<int>(p.frozen->records.size()) &&
                         !p.frozen->records[k].failed)
                    value = p.frozen->records[k].dw_sq_integral;
                else if (diag == "caccioppoli" && k < static_cast<int>(p.caccioppoli.size()) &&
                         !p.caccioppoli[k].skipped)
                    value = p.caccioppoli[k].value;
                else if (diag == "reverse_holder" &&
                         k < static_cast<int>(p.reverse_holder.size()) &&
                         !p.reverse_holder[k].skipped)
                    value = p.reverse_holder[k].value;
                out << csv_double(p.probe(0)) << ',' << csv_double(p.probe(1)) << ',' << diag
                    << ',' << csv_double(radius) << ',' << csv_double(value) << '\n';
            }
        }
    }
}

void write_field_u_csv(const std::filesystem::path& path, const DiscreteMap& u) {
    std::ofstream out(path);
    out << "x,y";
    for (int i = 0; i < u.target_dim(); ++i) out << ",u" << i + 1;
    out << '\n';
    for (int v = 0; v < u.grid().node_count(); ++v) {
        const Eigen::Vector2d x = u.grid().node(v);
        out << csv_double(x(0)) << ',' << csv_double(x(1));
        for (int i = 0; i < u.target_dim(); ++i) out << ',' << csv_double(u.values()(v, i));
        out << '\n';
    }
}

void write_field_grad_csv(const std::filesystem::path& path, const DiscreteMap& u) {
    const GradientField field(u);
    std::ofstream out(path);
    out << "x,y";
    for (int i = 0; i < u.target_dim(); ++i)
        for (int a = 0; a < 2; ++a) out << ",du" << i + 1 << "_dx" << a + 1;
    out << '\n';
    for (int v = 0; v < u.grid().node_count(); ++v) {
        const Eigen::Vector2d x = u.grid().node(v);
        const Eigen::MatrixXd g = field.recovered(v);
        out << csv_double(x(0)) << ',' << csv_double(x(1));
        for (int i = 0; i < u.target_dim(); ++i)
            for (int a = 0; a < 2; ++a) out << ',' << csv_double(g(i, a));
        out << '\n';
    }
}

} // namespace

MetricVerification verify_metric(const FinslerStructure& F, int sample_budget,
                                 std::uint64_t seed) {
    if (sample_budget < 8)
        throw ContractViolation("verify_metric: sample budget too small");
    MetricVerification v;
    v.has_analytic = F.has_analytic_tensor();
    v.declared_bounds = F.declared_bounds();
    v.declared_modulus = F.declared_modulus();

    const auto samples = random_slit_samples(F.target_dim(), sample_budget, seed);
    const std::vector<double> scales = {0.5, 2.0, 10.0};
    if (v.has_analytic) {
        v.homogeneity_analytic = verify_homogeneity(F, samples, scales, TensorMode::Analytic);
        v.euler_analytic = verify_euler_identity(F, samples, TensorMode::Analytic);
    }
    v.homogeneity_fd = verify_homogeneity(F, samples, scales, TensorMode::FiniteDifference);
    v.euler_fd = verify_euler_identity(F, samples, TensorMode::FiniteDifference);

    std::vector<Eigen::VectorXd> u_samples;
    const int u_budget = std::min<int>(sample_budget, 64);
    for (int i = 0; i < u_budget; ++i) u_samples.push_back(samples[i].u);
    v.bounds = estimate_convexity_bounds(F, u_samples, 64);

    std::vector<Eigen::VectorXd> x_samples;
    for (int i = 0; i < 8; ++i) x_samples.push_back(samples[i].X);
    v.modulus = estimate_modulus(F, default_modulus_pairs(F.target_dim(), seed + 1), x_samples);
    return v;
}

nlohmann::ordered_json verification_to_json(const MetricVerification& v) {
    ordered_json j;
    j["has_analytic_tensor"] = v.has_analytic;
    if (v.has_analytic) {
        j["homogeneity_deviation_analytic"] = v.homogeneity_analytic;
        j["euler_deviation_analytic"] = v.euler_analytic;
    }
    j["homogeneity_deviation_fd"] = v.homogeneity_fd;
    j["euler_deviation_fd"] = v.euler_fd;
    j["lambda_min"] = v.bounds.lambda_min;
    j["lambda_max"] = v.bounds.lambda_max;
    j["convexity_samples"] = v.bounds.sample_count;
    ordered_json m;
    m["c_omega"] = v.modulus.c_omega;
    m["sigma_defined"] = v.modulus.sigma_defined;
    if (v.modulus.sigma_defined) m["sigma"] = v.modulus.sigma;
    m["max_observed_ratio"] = v.modulus.max_observed_ratio;
    m["pair_count"] = v.modulus.pair_count;
    j["modulus"] = m;
    if (v.declared_bounds) {
        j["declared_lambda_min"] = v.declared_bounds->first;
        j["declared_lambda_max"] = v.declared_bounds->second;
    }
    if (v.declared_modulus) {
        j["declared_c_omega"] = v.declared_modulus->first;
        j["declared_sigma"] = v.declared_modulus->second;
    }
    return j;
}

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    const auto t_start = Clock::now();

    // effective seed and output directory, with provenance
    const std::uint64_t seed = opts.seed ? *opts.seed : cfg.seed;
    const std::string seed_source = opts.seed ? "cli" : "config";
    std::string out_dir = cfg.output_dir;
    std::string out_dir_source = "config";
    if (!opts.out_dir_env.empty()) {
        out_dir = opts.out_dir_env;
        out_dir_source = "env";
    }
    if (!opts.out_dir.empty()) {
        out_dir = opts.out_dir;
        out_dir_source = "cli";
    }

    auto grid = std::make_shared<DomainGrid>(cfg.resolution);
    const SourceMetric g = make_source_metric(cfg.source_metric, cfg.source_params);
    const auto target = make_target_metric(cfg.target_metric, cfg.target_params);
    const BoundaryData phi = make_boundary(cfg.boundary_name, cfg.boundary_params);
    if (phi.dim() != target->target_dim())
        throw ConfigError("boundary data dimension " + std::to_string(phi.dim()) +
                          " does not match target metric dimension " +
                          std::to_string(target->target_dim()));
    const CircleQuadrature quad(cfg.circle_nodes);

    const MetricVerification verification =
        verify_metric(*target, cfg.verification_samples, seed);

    const auto t_solve = Clock::now();
    SolveConfig solver_cfg = cfg.solver;
    solver_cfg.threads = std::max(1, opts.threads);
    const SolveResult solve = minimize(*target, grid, g, phi, quad, solver_cfg);
    const double solve_seconds = seconds_since(t_solve);

    const auto t_diag = Clock::now();
    std::vector<ProbeResult> probe_results;
    const auto probes = cfg.resolved_probes();
    for (std::size_t k = 0; k < probes.size(); ++k) {
        probe_results.push_back(run_probe(cfg, solve.map, *target, g, quad, probes[k],
                                          seed + 1000 + k, solver_cfg.threads));
    }

    std::vector<std::pair<double, RatioRecord>> higher_integrability;
    for (double q : cfg.q_values)
        higher_integrability.emplace_back(q, higher_integrability_check(solve.map, phi, q));
    const double diag_seconds = seconds_since(t_diag);

    // report assembly
    ordered_json report;
    report["version"] = kVersion;

    ordered_json config_echo;
    for (const auto& [k, v] : cfg.echo()) config_echo[k] = v;
    config_echo["seed"] = seed;
    config_echo["seed_source"] = seed_source;
    config_echo["output.dir"] = out_dir;
    config_echo["output.dir_source"] = out_dir_source;
    report["config"] = config_echo;

    report["structural_verification"] = verification_to_json(verification);

    ordered_json solve_json;
    solve_json["converged"] = solve.converged;
    solve_json["iterations"] = solve.iterations;
    solve_json["final_energy"] = solve.final_energy;
    solve_json["final_gradient_sup"] = solve.final_gradient_sup;
    solve_json["initial_energy"] = solve.energy_history.front();
    solve_json["energy_history_length"] = solve.energy_history.size();
    bool monotone = true;
    for (std::size_t i = 1; i < solve.energy_history.size(); ++i)
        monotone = monotone && solve.energy_history[i] <= solve.energy_history[i - 1];
    solve_json["energy_history_nonincreasing"] = monotone;
    char hash_buf[32];
    std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                  static_cast<unsigned long long>(solve.init_hash));
    solve_json["init_hash"] = hash_buf;
    report["solve"] = solve_json;

    ordered_json diag;
    diag["q_values"] = cfg.q_values;
    ordered_json hi = ordered_json::array();
    for (const auto& [q, rec] : higher_integrability) {
        ordered_json e;
        e["q"] = q;
        if (rec.skipped) {
            e["skipped"] = true;
            e["reason"] = rec.reason;
        } else {
            e["ratio"] = rec.value;
        }
        hi.push_back(e);
    }
    diag["higher_integrability"] = hi;
    ordered_json probes_json = ordered_json::array();
    for (const auto& p : probe_results) probes_json.push_back(probe_json(p));
    diag["probes"] = probes_json;
    report["diagnostics"] = diag;

    ordered_json timings;
    timings["solve_seconds"] = solve_seconds;
    timings["diagnostics_seconds"] = diag_seconds;
    timings["total_seconds"] = seconds_since(t_start);
    timings["threads"] = solver_cfg.threads;
    report["timings"] = timings;

    // persist
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json");
        out << report.dump(2) << '\n';
    }
    write_decay_csv(dir / "decay_fits.csv", cfg, probe_results);
    write_field_u_csv(dir / "field_u.csv", solve.map);
    write_field_grad_csv(dir / "field_grad.csv", solve.map);

    RunReport result;
    result.json = std::move(report);
    result.output_dir = dir;
    result.solver_converged = solve.converged;
    return result;
}

RunReport run_scenario_file(const std::string& config_path, const RunOptions& opts) {
    return run_scenario(ScenarioConfig::from_file(config_path), opts);
}

} // namespace centore
