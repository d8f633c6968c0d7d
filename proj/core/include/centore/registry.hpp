#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "centore/domain.hpp"
#include "centore/finsler.hpp"

namespace centore {

using ParamMap = std::map<std::string, std::string>;

/// Builds a target metric by registry name. Unknown names raise ConfigError
/// listing the registry contents; unknown parameter keys are rejected.
///
/// Registered: euclidean; riemannian_u (eps); rough (eps); randers (b);
/// randers_u (scale); minkowski_quartic (c). All accept dim (default 2).
std::unique_ptr<FinslerStructure> make_target_metric(const std::string& name,
                                                     const ParamMap& params);

/// Registered: euclidean; curved.
SourceMetric make_source_metric(const std::string& name, const ParamMap& params);

/// Registered: affine (a11, a12, a21, a22, c1, c2); constant (value);
/// sine_warp (amp1, amp2).
BoundaryData make_boundary(const std::string& name, const ParamMap& params);

std::vector<std::string> target_metric_names();
std::vector<std::string> source_metric_names();
std::vector<std::string> boundary_names();

} // namespace centore
