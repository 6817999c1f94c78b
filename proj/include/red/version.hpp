#pragma once

namespace red {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace red
