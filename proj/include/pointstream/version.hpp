#pragma once

namespace pointstream {
inline constexpr const char* kVersion = "0.1.0";
}
