#pragma once

namespace saecon {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace saecon
