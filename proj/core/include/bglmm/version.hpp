#pragma once

namespace bglmm {

inline constexpr const char* kVersion = "1.0.0";

// Bumped whenever the JSON output layout changes incompatibly.
inline constexpr int kOutputSchemaVersion = 1;

}  // namespace bglmm
