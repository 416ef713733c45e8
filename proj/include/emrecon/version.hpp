#pragma once

namespace emrecon {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace emrecon
