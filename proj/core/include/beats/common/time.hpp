#pragma once

#include <chrono>
#include <cstdint>

namespace beats {

/// Microseconds since the Unix epoch (UTC).
using UtcMicros = std::int64_t;

inline UtcMicros utc_now_us() noexcept {
  using namespace std::chrono;
  return duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
}

inline double seconds_between(UtcMicros from, UtcMicros to) noexcept {
  return static_cast<double>(to - from) * 1e-6;
}

}  // namespace beats
