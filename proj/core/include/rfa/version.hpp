#pragma once

namespace rfa {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace rfa
