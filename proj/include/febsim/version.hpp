#pragma once

#include <string_view>

namespace febsim {

inline constexpr std::string_view kToolVersion = "1.0.0";

}  // namespace febsim
