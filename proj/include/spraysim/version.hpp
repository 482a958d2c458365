#pragma once

namespace spraysim {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever any module's built-in defaults change; recorded in run
// manifests so old outputs can be traced to the defaults that produced them.
inline constexpr int kDefaultsVersion = 1;

}  // namespace spraysim
