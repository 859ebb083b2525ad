#pragma once

namespace dnull {
inline constexpr const char* kVersion = "0.1.0";
}
