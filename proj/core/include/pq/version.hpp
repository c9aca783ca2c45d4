#pragma once

namespace pq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pq
