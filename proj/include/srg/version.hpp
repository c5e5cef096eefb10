#pragma once

namespace srg {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace srg
