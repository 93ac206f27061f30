#pragma once

namespace floquet_ep {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kFileFormatVersion = 1;

}  // namespace floquet_ep
