#pragma once

namespace vlct {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kContainerFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace vlct
