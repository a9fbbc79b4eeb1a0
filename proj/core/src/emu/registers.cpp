#include "beats/emu/registers.hpp"

#include <string>

#include "beats/common/error.hpp"

namespace beats::emu {

namespace {

constexpr std::array<int, 7> kGains = {1, 2, 4, 6, 8, 12, 24};

constexpr std::array<std::uint8_t, kRegisterCount> make_defaults() {
  std::array<std::uint8_t, kRegisterCount> d{};
  d[addr(Reg::Id)] = kDeviceId;
  d[addr(Reg::Config1)] = 0x96;
  d[addr(Reg::Config2)] = 0xC0;
  d[addr(Reg::Config3)] = 0x60;
  for (std::size_t ch = 0; ch < kChannelsPerDevice; ++ch) d[ch_set(ch)] = 0x61;
  return d;
}

constexpr auto kDefaults = make_defaults();

}  // namespace

std::optional<int> gain_from_bits(std::uint8_t gain_bits) noexcept {
  if (gain_bits >= kGains.size()) return std::nullopt;
  return kGains[gain_bits];
}

std::optional<std::uint8_t> gain_to_bits(int gain) noexcept {
  for (std::size_t i = 0; i < kGains.size(); ++i)
    if (kGains[i] == gain) return static_cast<std::uint8_t>(i);
  return std::nullopt;
}

std::optional<std::uint8_t> dr_bits_for_rate(int rate_hz) noexcept {
  for (std::uint8_t dr = 0; dr <= bits::kConfig1DrMask; ++dr) {
    if (nominal_rate_hz(dr) == static_cast<double>(rate_hz)) return dr;
  }
  return std::nullopt;
}

void RegisterFile::reset() noexcept { bytes_ = kDefaults; }

const std::array<std::uint8_t, kRegisterCount>& RegisterFile::defaults() noexcept {
  return kDefaults;
}

std::uint8_t RegisterFile::read(std::uint8_t address) const {
  if (address >= kRegisterCount)
    throw Error(ErrorCode::InvalidRegisterAddress,
                "register address " + std::to_string(address) + " out of range");
  return bytes_[address];
}

void RegisterFile::write(std::uint8_t address, std::uint8_t value) {
  if (address >= kRegisterCount)
    throw Error(ErrorCode::InvalidRegisterAddress,
                "register address " + std::to_string(address) + " out of range");
  if (address == addr(Reg::Id))
    throw Error(ErrorCode::ReadOnlyRegister, "ID register (0x00) is read-only");
  bytes_[address] = value;
}

}  // namespace beats::emu
