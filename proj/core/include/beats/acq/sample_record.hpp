#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>

#include "beats/common/time.hpp"

namespace beats::acq {

/// Fixed-size FIFO record: [i64 t_utc_us][u32 status x devices][f64 volts x channels],
/// host byte order. Four devices give 8 + 16 + 256 = 280 bytes.
struct RecordLayout {
  std::size_t devices = 0;
  std::size_t channels = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return 8 + 4 * devices + 8 * channels; }

  void write(std::uint8_t* out, UtcMicros t, const std::uint32_t* status, const double* volts) const noexcept {
    std::memcpy(out, &t, 8);
    std::memcpy(out + 8, status, 4 * devices);
    std::memcpy(out + 8 + 4 * devices, volts, 8 * channels);
  }

  [[nodiscard]] UtcMicros time(const std::uint8_t* rec) const noexcept {
    UtcMicros t;
    std::memcpy(&t, rec, 8);
    return t;
  }
  void read_status(const std::uint8_t* rec, std::uint32_t* out) const noexcept {
    std::memcpy(out, rec + 8, 4 * devices);
  }
  void read_volts(const std::uint8_t* rec, double* out) const noexcept {
    std::memcpy(out, rec + 8 + 4 * devices, 8 * channels);
  }
};

}  // namespace beats::acq
