#include "centore/registry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "centore/errors.hpp"

namespace centore {

namespace {

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

void reject_unknown(const ParamMap& params, const std::vector<std::string>& allowed,
                    const std::string& what) {
    for (const auto& [key, value] : params) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(what + ": unknown parameter '" + key + "' (allowed: " +
                              join(allowed) + ")");
    }
}

double get_double(const ParamMap& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("parameter '" + key + "': cannot parse '" + it->second +
                          "' as a number");
    }
}

int get_int(const ParamMap& params, const std::string& key, int fallback) {
    const double v = get_double(params, key, fallback);
    const int i = static_cast<int>(v);
    if (i != v) throw ConfigError("parameter '" + key + "' must be an integer");
    return i;
}

Eigen::VectorXd get_vector(const ParamMap& params, const std::string& key,
                           const Eigen::VectorXd& fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    std::vector<double> entries;
    std::stringstream ss(it->second);
    std::string token;
    while (std::getline(ss, token, ',')) {
        try {
            entries.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("parameter '" + key + "': cannot parse '" + token +
                              "' as a number");
        }
    }
    if (entries.empty()) throw ConfigError("parameter '" + key + "' is empty");
    Eigen::VectorXd v(static_cast<int>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) v(static_cast<int>(i)) = entries[i];
    return v;
}

} // namespace

std::vector<std::string> target_metric_names() {
    return {"euclidean", "riemannian_u", "rough", "randers", "randers_u", "minkowski_quartic"};
}

std::vector<std::string> source_metric_names() { return {"euclidean", "curved"}; }

std::vector<std::string> boundary_names() { return {"affine", "constant", "sine_warp"}; }

std::unique_ptr<FinslerStructure> make_target_metric(const std::string& name,
                                                     const ParamMap& params) {
    if (name == "euclidean") {
        reject_unknown(params, {"dim"}, name);
        return std::make_unique<EuclideanMetric>(get_int(params, "dim", 2));
    }
    if (name == "riemannian_u") {
        reject_unknown(params, {"dim", "eps"}, name);
        return std::make_unique<ConformalInUMetric>(get_int(params, "dim", 2),
                                                    get_double(params, "eps", 0.1),
                                                    ConformalInUMetric::Profile::SmoothSin);
    }
    if (name == "rough") {
        reject_unknown(params, {"dim", "eps"}, name);
        return std::make_unique<ConformalInUMetric>(get_int(params, "dim", 2),
                                                    get_double(params, "eps", 0.3),
                                                    ConformalInUMetric::Profile::RootAbsSin);
    }
    if (name == "randers") {
        reject_unknown(params, {"dim", "b"}, name);
        const int dim = get_int(params, "dim", 2);
        Eigen::VectorXd b0 = Eigen::VectorXd::Zero(dim);
        b0(0) = 0.3;
        return std::make_unique<RandersMetric>(dim, get_vector(params, "b", b0));
    }
    if (name == "randers_u") {
        reject_unknown(params, {"dim", "scale"}, name);
        const int dim = get_int(params, "dim", 2);
        if (dim != 2) throw ConfigError("randers_u: only dim = 2 is registered");
        const double scale = get_double(params, "scale", 0.3);
        if (std::abs(scale) * M_SQRT2 >= 1.0)
            throw ConfigError("randers_u: |scale| * sqrt(2) must stay below 1");
        auto drift = [scale](const Eigen::VectorXd& u) {
            Eigen::VectorXd b(2);
            b << scale * std::cos(u(1)), scale * std::sin(u(0));
            return b;
        };
        return std::make_unique<RandersMetric>(2, drift, std::abs(scale) * M_SQRT2,
                                               std::abs(scale), "randers_u");
    }
    if (name == "minkowski_quartic") {
        reject_unknown(params, {"dim", "c"}, name);
        return std::make_unique<MinkowskiQuarticMetric>(get_int(params, "dim", 2),
                                                        get_double(params, "c", 0.1));
    }
    throw ConfigError("unknown target metric '" + name + "' (registered: " +
                      join(target_metric_names()) + ")");
}

SourceMetric make_source_metric(const std::string& name, const ParamMap& params) {
    reject_unknown(params, {}, name);
    if (name == "euclidean") return SourceMetric::euclidean();
    if (name == "curved") return SourceMetric::curved();
    throw ConfigError("unknown source metric '" + name + "' (registered: " +
                      join(source_metric_names()) + ")");
}

BoundaryData make_boundary(const std::string& name, const ParamMap& params) {
    if (name == "affine") {
        reject_unknown(params, {"a11", "a12", "a21", "a22", "c1", "c2"}, name);
        Eigen::Matrix2d A;
        A << get_double(params, "a11", 1.0), get_double(params, "a12", 0.0),
            get_double(params, "a21", 0.0), get_double(params, "a22", 1.0);
        Eigen::Vector2d c(get_double(params, "c1", 0.0), get_double(params, "c2", 0.0));
        return BoundaryData::affine(A, c);
    }
    if (name == "constant") {
        reject_unknown(params, {"value"}, name);
        return BoundaryData::constant(get_vector(params, "value", Eigen::Vector2d::Zero()));
    }
    if (name == "sine_warp") {
        reject_unknown(params, {"amp1", "amp2"}, name);
        return BoundaryData::sine_warp(get_double(params, "amp1", 0.3),
                                       get_double(params, "amp2", 0.2));
    }
    throw ConfigError("unknown boundary data '" + name + "' (registered: " +
                      join(boundary_names()) + ")");
}

} // namespace centore
