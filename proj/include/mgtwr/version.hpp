#pragma once

namespace mgtwr {
inline constexpr const char* kVersion = "0.1.0";
}
