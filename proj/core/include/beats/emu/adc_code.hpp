#pragma once

#include <cstdint>
#include <span>

namespace beats::emu {

inline constexpr double kDefaultVref = 4.5;
inline constexpr std::int32_t kCodeMax = (1 << 23) - 1;
inline constexpr std::int32_t kCodeMin = -(1 << 23);

struct EncodedSample {
  std::int32_t code;  // sign-extended 24-bit value
  bool saturated;
};

/// Quantize an input-referred voltage: round(v * gain * (2^23 - 1) / vref),
/// clipped to the 24-bit two's complement range.
EncodedSample encode_code(double voltage, double gain, double vref) noexcept;

/// Big-endian 24-bit two's complement packing.
inline void put_code24(std::int32_t code, std::span<std::uint8_t, 3> out) noexcept {
  const auto u = static_cast<std::uint32_t>(code);
  out[0] = static_cast<std::uint8_t>(u >> 16);
  out[1] = static_cast<std::uint8_t>(u >> 8);
  out[2] = static_cast<std::uint8_t>(u);
}

inline std::int32_t get_code24(std::span<const std::uint8_t, 3> in) noexcept {
  const std::uint32_t u = (std::uint32_t{in[0]} << 16) | (std::uint32_t{in[1]} << 8) | in[2];
  // sign-extend bit 23
  return static_cast<std::int32_t>((u ^ 0x800000u) - 0x800000u);
}

inline std::uint32_t code_to_u24(std::int32_t code) noexcept {
  return static_cast<std::uint32_t>(code) & 0xFFFFFFu;
}

}  // namespace beats::emu
