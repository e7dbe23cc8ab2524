#pragma once

namespace sfwm {

inline constexpr const char* kSoftwareVersion = "1.0.0";
// Bumped whenever a config key or an output file layout changes.
inline constexpr int kSchemaVersion = 1;

}  // namespace sfwm
