#pragma once

#include <string_view>

namespace fdegrow {

inline constexpr std::string_view tool_name = "fdegrow";
inline constexpr std::string_view tool_version = "0.1.0";

}  // namespace fdegrow
