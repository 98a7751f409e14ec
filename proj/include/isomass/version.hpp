#pragma once

namespace isomass {

inline constexpr const char* kToolName = "isomass";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace isomass
