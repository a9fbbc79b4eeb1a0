#pragma once

#include <cstdint>
#include <functional>
#include <span>

namespace beats::emu {

/// Falling DRDY edge. t_conv_us is the device-side conversion time, which
/// virtual-time drivers use as their clock; hardware would not report it.
struct DrdyEdge {
  double t_conv_us;
};

/// The five-signal host interface of a converter chain: chip select,
/// serial clock + data in/out (folded into byte transfers), and DRDY.
class AdcInterface {
 public:
  using DrdyHandler = std::function<void(const DrdyEdge&)>;

  virtual ~AdcInterface() = default;

  virtual void set_chip_select(bool asserted) = 0;
  /// Eight SCLK periods: shifts `din` in and returns the byte on DOUT.
  virtual std::uint8_t transfer(std::uint8_t din) = 0;
  virtual void transfer(std::span<const std::uint8_t> din, std::span<std::uint8_t> dout) {
    for (std::size_t i = 0; i < din.size(); ++i) dout[i] = transfer(din[i]);
  }
  /// Invoked on every DRDY edge, from the device's context.
  virtual void set_drdy_handler(DrdyHandler handler) = 0;
};

}  // namespace beats::emu
