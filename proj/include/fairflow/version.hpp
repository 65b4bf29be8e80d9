#pragma once

namespace fairflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fairflow
