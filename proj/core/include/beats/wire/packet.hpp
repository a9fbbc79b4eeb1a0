#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beats/common/time.hpp"

namespace beats::wire {

/// Unit of transmission: a run of consecutive samples from one session.
///
/// Storage is flat and sample-major: sample i owns status[i*device_count ..]
/// and volts[i*channel_count ..].
struct DataPacket {
  std::string session_id;
  std::uint64_t seq = 0;
  std::size_t device_count = 0;
  std::size_t channel_count = 0;
  std::vector<UtcMicros> t;
  std::vector<std::uint32_t> status;
  std::vector<double> volts;

  [[nodiscard]] std::size_t sample_count() const noexcept { return t.size(); }
  [[nodiscard]] bool is_probe() const noexcept { return t.empty(); }

  [[nodiscard]] std::span<const std::uint32_t> status_of(std::size_t i) const noexcept {
    return {status.data() + i * device_count, device_count};
  }
  [[nodiscard]] std::span<const double> volts_of(std::size_t i) const noexcept {
    return {volts.data() + i * channel_count, channel_count};
  }

  void reserve(std::size_t samples) {
    t.reserve(samples);
    status.reserve(samples * device_count);
    volts.reserve(samples * channel_count);
  }

  /// Bitwise equality (volts compared by representation, not by value).
  [[nodiscard]] bool identical(const DataPacket& other) const noexcept;
};

}  // namespace beats::wire
