#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace beats::emu {

// SPI command opcodes of the converter.
namespace opcode {
inline constexpr std::uint8_t kWakeup = 0x02;
inline constexpr std::uint8_t kStandby = 0x04;
inline constexpr std::uint8_t kReset = 0x06;
inline constexpr std::uint8_t kStart = 0x08;
inline constexpr std::uint8_t kStop = 0x0A;
inline constexpr std::uint8_t kRdatac = 0x10;
inline constexpr std::uint8_t kSdatac = 0x11;
inline constexpr std::uint8_t kRdata = 0x12;
// Two-byte headers: first byte carries the 5-bit start address, second byte count-1.
inline constexpr std::uint8_t kRregBase = 0x20;
inline constexpr std::uint8_t kWregBase = 0x40;
inline constexpr std::uint8_t kAddressMask = 0x1F;

constexpr std::uint8_t rreg(std::uint8_t address) { return kRregBase | (address & kAddressMask); }
constexpr std::uint8_t wreg(std::uint8_t address) { return kWregBase | (address & kAddressMask); }
constexpr bool is_rreg(std::uint8_t op) { return (op & 0xE0) == kRregBase; }
constexpr bool is_wreg(std::uint8_t op) { return (op & 0xE0) == kWregBase; }
}  // namespace opcode

enum class Reg : std::uint8_t {
  Id = 0x00,
  Config1 = 0x01,
  Config2 = 0x02,
  Config3 = 0x03,
  Loff = 0x04,
  Ch1Set = 0x05,
  Ch2Set = 0x06,
  Ch3Set = 0x07,
  Ch4Set = 0x08,
  Ch5Set = 0x09,
  Ch6Set = 0x0A,
  Ch7Set = 0x0B,
  Ch8Set = 0x0C,
  BiasSensP = 0x0D,
  BiasSensN = 0x0E,
  LoffSensP = 0x0F,
  LoffSensN = 0x10,
  LoffFlip = 0x11,
  LoffStatP = 0x12,
  LoffStatN = 0x13,
  Gpio = 0x14,
  Misc1 = 0x15,
  Misc2 = 0x16,
  Config4 = 0x17,
};

inline constexpr std::size_t kRegisterCount = 0x18;
inline constexpr std::size_t kChannelsPerDevice = 8;

constexpr std::uint8_t addr(Reg r) { return static_cast<std::uint8_t>(r); }
constexpr std::uint8_t ch_set(std::size_t channel) {
  return static_cast<std::uint8_t>(addr(Reg::Ch1Set) + channel);
}

// Bit fields used by the emulator.
namespace bits {
inline constexpr std::uint8_t kConfig1DaisyEn = 0x40;  // 0 = daisy-chain, 1 = multiple readback
inline constexpr std::uint8_t kConfig1ClkEn = 0x20;
inline constexpr std::uint8_t kConfig1DrMask = 0x07;
inline constexpr std::uint8_t kConfig2IntCal = 0x10;
inline constexpr std::uint8_t kConfig2CalAmp0 = 0x04;
inline constexpr std::uint8_t kConfig2CalFreqMask = 0x03;
inline constexpr std::uint8_t kChSetPowerDown = 0x80;
inline constexpr std::uint8_t kChSetGainShift = 4;
inline constexpr std::uint8_t kChSetGainMask = 0x70;
inline constexpr std::uint8_t kChSetSrb2 = 0x08;
inline constexpr std::uint8_t kChSetMuxMask = 0x07;
inline constexpr std::uint8_t kMisc1Srb1 = 0x20;
}  // namespace bits

enum class ChannelMux : std::uint8_t {
  Normal = 0b000,
  InputShort = 0b001,
  BiasMeas = 0b010,
  Supply = 0b011,
  Temperature = 0b100,
  TestSignal = 0b101,
  BiasDrp = 0b110,
  BiasDrn = 0b111,
};

/// Code for each programmable gain; GAIN bits 111 are reserved.
std::optional<int> gain_from_bits(std::uint8_t gain_bits) noexcept;
std::optional<std::uint8_t> gain_to_bits(int gain) noexcept;

/// Output data rate for DR[2:0] at the nominal 2.048 MHz clock: 16000 / 2^DR.
constexpr double nominal_rate_hz(std::uint8_t dr_bits) {
  return 16000.0 / static_cast<double>(1u << (dr_bits & bits::kConfig1DrMask));
}
std::optional<std::uint8_t> dr_bits_for_rate(int rate_hz) noexcept;

/// ID value of an 8-channel part; the low nibble must read 0xE.
inline constexpr std::uint8_t kDeviceId = 0x3E;

/// Byte image of one device's register bank.
class RegisterFile {
 public:
  RegisterFile() { reset(); }

  void reset() noexcept;

  [[nodiscard]] std::uint8_t read(std::uint8_t address) const;
  /// Writes to the read-only ID register throw ReadOnlyRegister.
  void write(std::uint8_t address, std::uint8_t value);
  [[nodiscard]] std::uint8_t operator[](Reg r) const noexcept { return bytes_[addr(r)]; }

  [[nodiscard]] const std::array<std::uint8_t, kRegisterCount>& bytes() const noexcept {
    return bytes_;
  }

  /// Test hook: overwrite the factory ID (models a broken or absent part).
  void force_id(std::uint8_t value) noexcept { bytes_[0] = value; }

  [[nodiscard]] static const std::array<std::uint8_t, kRegisterCount>& defaults() noexcept;

  friend bool operator==(const RegisterFile&, const RegisterFile&) = default;

 private:
  std::array<std::uint8_t, kRegisterCount> bytes_{};
};

}  // namespace beats::emu
