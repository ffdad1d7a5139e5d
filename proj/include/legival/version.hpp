#pragma once

namespace legival {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace legival
