#pragma once

namespace confwave {

inline constexpr const char* kVersion = "0.1.0";

} // namespace confwave
