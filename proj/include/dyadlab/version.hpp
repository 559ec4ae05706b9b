#pragma once

namespace dyadlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dyadlab
