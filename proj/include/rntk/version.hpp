#pragma once

namespace rntk {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rntk
