#pragma once

namespace hdp {

inline constexpr const char* kToolName = "hdpopt";
inline constexpr const char* kVersion = "0.1.0";

} // namespace hdp
