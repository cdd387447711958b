#pragma once

namespace cellplan {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cellplan
