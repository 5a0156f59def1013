#pragma once

namespace stableheat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stableheat
