#pragma once

namespace splatmotion {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace splatmotion
