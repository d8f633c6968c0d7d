#pragma once

namespace centore {

inline constexpr const char* kVersion = "centore 0.1.0";

} // namespace centore
