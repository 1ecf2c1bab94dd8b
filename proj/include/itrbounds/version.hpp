#pragma once

namespace itrb {
inline constexpr const char* kVersion = "0.1.0";
}
