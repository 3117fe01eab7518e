#pragma once

namespace smallgroup {

inline constexpr const char* kToolName = "smallgroup-lab";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace smallgroup
