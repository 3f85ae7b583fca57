#pragma once

namespace dnlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dnlab
