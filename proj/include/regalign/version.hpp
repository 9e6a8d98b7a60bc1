#pragma once

namespace regalign {

inline constexpr const char* tool_name = "regalign";
inline constexpr const char* tool_version = "0.1.0";

}  // namespace regalign
