#pragma once

namespace weylcps {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "weylcps";

}  // namespace weylcps
