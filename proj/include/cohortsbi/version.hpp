#pragma once

namespace cohortsbi {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace cohortsbi
