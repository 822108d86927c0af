#pragma once

namespace loggas {
inline constexpr const char* kVersion = "0.1.0";
}
