#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "beats/acq/config.hpp"
#include "beats/emu/adc_interface.hpp"

namespace beats::acq {

/// Host-side command helpers over a chain's serial interface. Every
/// transaction is framed by chip select.
class SpiHost {
 public:
  SpiHost(emu::AdcInterface& adc, std::size_t device_count) : adc_(adc), devices_(device_count) {}

  void command(std::uint8_t opcode);
  void write_registers(std::uint8_t address, std::span<const std::uint8_t> values);
  /// Returns count bytes per device, device 1 first.
  std::vector<std::uint8_t> read_registers(std::uint8_t address, std::size_t count);
  /// Issues RDATA and shifts the whole chain frame into `out`.
  void read_data(std::span<std::uint8_t> out);

  [[nodiscard]] std::size_t device_count() const noexcept { return devices_; }
  [[nodiscard]] std::size_t frame_bytes() const noexcept { return devices_ * emu::kDeviceFrameBytes; }

 private:
  emu::AdcInterface& adc_;
  std::size_t devices_;
  std::vector<std::uint8_t> din_;
  std::vector<std::uint8_t> dout_;
};

struct ConfigureResult {
  int attempts = 0;                  // 1, or 2 after a RESET retry
  std::vector<std::uint8_t> ids;     // ID register per device
};

/// SDATAC, ID check, register program, read-back verify (one RESET + retry
/// on mismatch), then START. Throws IdCheckFailed or RegisterVerifyFailed.
ConfigureResult configure(SpiHost& spi, const AcqConfig& config);

}  // namespace beats::acq
