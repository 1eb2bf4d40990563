#pragma once

namespace ecmatch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ecmatch
