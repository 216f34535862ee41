#pragma once

#include <string_view>

namespace senselm {

inline constexpr std::string_view kSoftwareVersion = "0.1.0";

}  // namespace senselm
