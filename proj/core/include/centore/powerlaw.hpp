#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "centore/errors.hpp"

namespace centore {

/// Ordinary least-squares line through (log x, log y) points.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;       // in log space
    double max_residual = 0.0;    // max |log y - (intercept + slope log x)|
    std::size_t point_count = 0;
};

/// Fits log y = intercept + slope * log x by OLS, all points weighted equally.
/// Requires x, y > 0 and at least two points.
inline LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ContractViolation("fit_loglog: size mismatch");
    if (x.size() < 2)
        throw EmptySampleError("fit_loglog: need at least two points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300)
        throw ContractViolation("fit_loglog: abscissae are degenerate");
    LogLogFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.point_count = n;
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = fit.intercept + fit.slope * std::log(x[i]);
        fit.max_residual = std::max(fit.max_residual, std::abs(std::log(y[i]) - pred));
    }
    return fit;
}

} // namespace centore
