#pragma once

namespace rmt {

inline constexpr const char* version = "0.1.0";

} // namespace rmt
