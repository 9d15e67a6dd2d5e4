#pragma once

namespace hstkm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hstkm
