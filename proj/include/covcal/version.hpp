#pragma once

namespace covcal {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace covcal
