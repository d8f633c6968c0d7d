#include "centore/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "centore/errors.hpp"

namespace centore {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "' as a number");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    const long long i = static_cast<long long>(v);
    if (static_cast<double>(i) != v)
        throw ConfigError("config key '" + key + "' must be an integer");
    return i;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string token;
    while (std::getline(ss, token, sep)) {
        token = trim(token);
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

KeyValues parse_config_text(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (kv.count(key))
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        kv[key] = value;
    }
    return kv;
}

KeyValues parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

const std::vector<std::string>& ladder_diagnostic_names() {
    static const std::vector<std::string> names = {
        "dirichlet_growth", "campanato", "caccioppoli", "reverse_holder", "frozen_comparison"};
    return names;
}

ScenarioConfig ScenarioConfig::from_keyvalues(const KeyValues& kv) {
    ScenarioConfig cfg;
    cfg.diagnostics = ladder_diagnostic_names();

    KeyValues pending = kv;
    auto take = [&pending](const std::string& key) -> std::optional<std::string> {
        auto it = pending.find(key);
        if (it == pending.end()) return std::nullopt;
        std::string v = it->second;
        pending.erase(it);
        return v;
    };

    if (auto v = take("domain.resolution")) cfg.resolution = static_cast<int>(parse_int("domain.resolution", *v));
    if (auto v = take("domain.metric")) cfg.source_metric = *v;
    if (auto v = take("target.metric")) cfg.target_metric = *v;
    if (auto v = take("boundary.name")) cfg.boundary_name = *v;
    if (auto v = take("quadrature.circle_nodes"))
        cfg.circle_nodes = static_cast<int>(parse_int("quadrature.circle_nodes", *v));

    if (auto v = take("solver.method")) {
        if (*v == "nonlinear_cg") cfg.solver.method = DescentMethod::NonlinearCG;
        else if (*v == "gradient_descent") cfg.solver.method = DescentMethod::GradientDescent;
        else throw ConfigError("solver.method: expected nonlinear_cg or gradient_descent, got '" + *v + "'");
    }
    if (auto v = take("solver.max_iterations"))
        cfg.solver.max_iterations = static_cast<int>(parse_int("solver.max_iterations", *v));
    if (auto v = take("solver.gradient_tolerance"))
        cfg.solver.gradient_tolerance = parse_double("solver.gradient_tolerance", *v);
    if (auto v = take("solver.armijo_slope"))
        cfg.solver.armijo_slope = parse_double("solver.armijo_slope", *v);
    if (auto v = take("solver.backtrack_factor"))
        cfg.solver.backtrack_factor = parse_double("solver.backtrack_factor", *v);
    if (auto v = take("solver.restart_interval"))
        cfg.solver.restart_interval = static_cast<int>(parse_int("solver.restart_interval", *v));
    if (auto v = take("solver.deterministic_seed"))
        cfg.solver.deterministic_seed = static_cast<std::uint64_t>(parse_int("solver.deterministic_seed", *v));

    if (auto v = take("diagnostics.probes")) {
        if (*v != "default") {
            for (const std::string& probe : split(*v, ';')) {
                const auto parts = split(probe, ',');
                if (parts.size() != 2)
                    throw ConfigError("diagnostics.probes: expected 'x,y' pairs separated by ';'");
                cfg.probes.emplace_back(parse_double("diagnostics.probes", parts[0]),
                                        parse_double("diagnostics.probes", parts[1]));
            }
            if (cfg.probes.empty()) throw ConfigError("diagnostics.probes: empty probe list");
        }
    }
    if (auto v = take("diagnostics.ladder_count"))
        cfg.ladder_count = static_cast<int>(parse_int("diagnostics.ladder_count", *v));
    if (auto v = take("diagnostics.q")) {
        cfg.q_values.clear();
        for (const std::string& q : split(*v, ','))
            cfg.q_values.push_back(parse_double("diagnostics.q", q));
        if (cfg.q_values.empty()) throw ConfigError("diagnostics.q: empty list");
    }
    if (auto v = take("diagnostics.run")) {
        cfg.diagnostics.clear();
        for (const std::string& name : split(*v, ',')) {
            const auto& known = ladder_diagnostic_names();
            if (std::find(known.begin(), known.end(), name) == known.end())
                throw ConfigError("diagnostics.run: unknown diagnostic '" + name + "'");
            cfg.diagnostics.push_back(name);
        }
    }
    if (auto v = take("diagnostics.holder")) cfg.run_holder = parse_bool("diagnostics.holder", *v);

    if (auto v = take("output.dir")) cfg.output_dir = *v;
    if (auto v = take("seed")) cfg.seed = static_cast<std::uint64_t>(parse_int("seed", *v));
    if (auto v = take("verification.samples"))
        cfg.verification_samples = static_cast<int>(parse_int("verification.samples", *v));

    // remaining dotted keys under target./source./boundary. are params
    for (auto it = pending.begin(); it != pending.end();) {
        const std::string& key = it->first;
        auto route = [&](const char* prefix, ParamMap& params) {
            const std::string p(prefix);
            if (key.rfind(p, 0) == 0 && key.size() > p.size()) {
                params[key.substr(p.size())] = it->second;
                return true;
            }
            return false;
        };
        if (route("target.", cfg.target_params) || route("source.", cfg.source_params) ||
            route("boundary.", cfg.boundary_params)) {
            it = pending.erase(it);
        } else {
            ++it;
        }
    }
    if (!pending.empty())
        throw ConfigError("unknown config key '" + pending.begin()->first + "'");

    // validation
    if (cfg.resolution < 9)
        throw ConfigError("domain.resolution: N >= 9 required, got " +
                          std::to_string(cfg.resolution));
    if (cfg.circle_nodes < 16)
        throw ConfigError("quadrature.circle_nodes: at least 16 required");
    if (cfg.ladder_count < 3) throw ConfigError("diagnostics.ladder_count: at least 3 required");
    for (double q : cfg.q_values)
        if (!(q > 2.0 && q <= 3.0))
            throw ConfigError("diagnostics.q: values must lie in (2, 3]");
    for (const auto& p : cfg.probes)
        if (p(0) < 0.0 || p(0) > 1.0 || p(1) < 0.0 || p(1) > 1.0)
            throw ConfigError("diagnostics.probes: probes must lie in the unit square");
    try {
        cfg.solver.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("solver configuration: ") + e.what());
    }
    // resolve registry names now so validation errors surface before any work
    (void)make_target_metric(cfg.target_metric, cfg.target_params);
    (void)make_source_metric(cfg.source_metric, cfg.source_params);
    (void)make_boundary(cfg.boundary_name, cfg.boundary_params);
    return cfg;
}

ScenarioConfig ScenarioConfig::from_file(const std::string& path) {
    return from_keyvalues(parse_config_file(path));
}

std::vector<Eigen::Vector2d> ScenarioConfig::resolved_probes() const {
    if (!probes.empty()) return probes;
    return {
        {0.5, 0.5},  {0.375, 0.375}, {0.625, 0.375}, {0.375, 0.625}, {0.625, 0.625},
        {0.5, 0.0},  {1.0, 0.5},     {0.5, 1.0},     {0.0, 0.5},
    };
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("domain.resolution", std::to_string(resolution));
    out.emplace_back("domain.metric", source_metric);
    for (const auto& [k, v] : source_params) out.emplace_back("source." + k, v);
    out.emplace_back("target.metric", target_metric);
    for (const auto& [k, v] : target_params) out.emplace_back("target." + k, v);
    out.emplace_back("boundary.name", boundary_name);
    for (const auto& [k, v] : boundary_params) out.emplace_back("boundary." + k, v);
    out.emplace_back("quadrature.circle_nodes", std::to_string(circle_nodes));
    out.emplace_back("solver.method", solver.method == DescentMethod::NonlinearCG
                                          ? "nonlinear_cg"
                                          : "gradient_descent");
    out.emplace_back("solver.max_iterations", std::to_string(solver.max_iterations));
    out.emplace_back("solver.gradient_tolerance", format_double(solver.gradient_tolerance));
    out.emplace_back("solver.armijo_slope", format_double(solver.armijo_slope));
    out.emplace_back("solver.backtrack_factor", format_double(solver.backtrack_factor));
    out.emplace_back("solver.restart_interval", std::to_string(solver.restart_interval));
    out.emplace_back("solver.deterministic_seed", std::to_string(solver.deterministic_seed));
    std::string probe_str;
    for (const auto& p : resolved_probes()) {
        if (!probe_str.empty()) probe_str += "; ";
        probe_str += format_double(p(0)) + "," + format_double(p(1));
    }
    out.emplace_back("diagnostics.probes", probe_str);
    out.emplace_back("diagnostics.ladder_count", std::to_string(ladder_count));
    std::string q_str;
    for (double q : q_values) {
        if (!q_str.empty()) q_str += ",";
        q_str += format_double(q);
    }
    out.emplace_back("diagnostics.q", q_str);
    std::string diag_str;
    for (const auto& d : diagnostics) {
        if (!diag_str.empty()) diag_str += ",";
        diag_str += d;
    }
    out.emplace_back("diagnostics.run", diag_str);
    out.emplace_back("diagnostics.holder", run_holder ? "true" : "false");
    out.emplace_back("output.dir", output_dir);
    out.emplace_back("seed", std::to_string(seed));
    out.emplace_back("verification.samples", std::to_string(verification_samples));
    return out;
}

} // namespace centore
