#pragma once

namespace mm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mm
