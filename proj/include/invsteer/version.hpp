#pragma once

namespace invsteer {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace invsteer
