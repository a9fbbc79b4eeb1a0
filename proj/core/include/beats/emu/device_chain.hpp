#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include "beats/emu/adc_code.hpp"
#include "beats/emu/registers.hpp"
#include "beats/emu/signal_source.hpp"

namespace beats::emu {

inline constexpr double kNominalClockHz = 2.048e6;
inline constexpr std::size_t kStatusBytes = 3;
inline constexpr std::size_t kDeviceFrameBytes = kStatusBytes + 3 * kChannelsPerDevice;  // 27

// Status word: 0xC nibble, LOFF_STATP (8), LOFF_STATN (8), GPIO nibble.
inline constexpr std::uint32_t kStatusPreamble = 0xC00000;
inline constexpr std::uint32_t kStatusPreambleMask = 0xF00000;
/// Emulator-specific: bit 0 of the GPIO nibble flags that a channel clipped.
inline constexpr std::uint32_t kStatusOverrange = 0x000001;

/// Input-referred Gaussian noise per output data rate.
struct NoiseProfile {
  bool enabled = true;
  std::array<double, 8> rms_by_dr{};  // V, indexed by DR[2:0]

  /// Input-short reference noise: 0.14/0.20/0.28/0.40/0.56 uV at 250..4000 Hz,
  /// extended by sqrt(2) per doubling for the 8 kHz and 16 kHz rates.
  static NoiseProfile reference();
  static NoiseProfile off();
  [[nodiscard]] double rms_for(std::uint8_t dr_bits) const noexcept;
};

/// Common-mode to output leakage of one channel: CMRR(f) in dB.
struct CommonModeLeakage {
  double cmrr_db = std::numeric_limits<double>::infinity();
  double corner_hz = 0.0;  // >0: leakage rises 20 dB/decade above the corner

  static CommonModeLeakage none() { return {}; }
  static CommonModeLeakage flat(double db) { return {db, 0.0}; }
  /// Board-like profile: about 110 dB at DC with a per-channel spread and a
  /// 20-30 Hz corner, deterministic in the channel index.
  static CommonModeLeakage typical(std::size_t channel);
  [[nodiscard]] double cmrr_at(double frequency_hz) const noexcept;
  [[nodiscard]] double dc_gain() const noexcept;
  [[nodiscard]] bool active() const noexcept { return cmrr_db < std::numeric_limits<double>::infinity(); }
};

struct ChannelInputs {
  SignalSource positive;
  SignalSource negative;  // ignored while SRB1 routes the reference pin
  CommonModeLeakage leakage;
};

struct ChainOptions {
  std::size_t device_count = 1;
  double clock_ppm = 0.0;  // signed error of the shared clock
  double vref = kDefaultVref;
  std::uint64_t seed = 1;
  NoiseProfile noise = NoiseProfile::reference();
};

struct DeviceFrame {
  std::uint32_t status = kStatusPreamble;
  std::array<std::int32_t, kChannelsPerDevice> codes{};
};

/// One conversion result of the whole chain, first device first.
struct ChainFrame {
  std::vector<DeviceFrame> per_device;
  std::uint64_t frame_index = 0;
  double t_conv_us = 0.0;

  [[nodiscard]] std::size_t byte_size() const noexcept { return kDeviceFrameBytes * per_device.size(); }
  void serialize_into(std::span<std::uint8_t> out) const;
  [[nodiscard]] std::vector<std::uint8_t> serialize() const;
  /// Inverse of serialize; frame_index/t_conv_us are not on the wire and stay 0.
  static ChainFrame parse(std::span<const std::uint8_t> bytes);
};

enum class ReadMode { Rdatac, Sdatac };

enum class Command { Wakeup, Standby, Reset, Start, Stop, Rdatac, Sdatac, Rdata, Rreg, Wreg };

struct CommandResult {
  Command command;
  /// Bytes shifted out on DOUT: RREG = count bytes per device in chain order,
  /// RDATA = the serialized latest frame. Empty otherwise.
  std::vector<std::uint8_t> data;
};

/// A single emulated 8-channel converter.
struct Device {
  RegisterFile registers;
  std::array<ChannelInputs, kChannelsPerDevice> inputs;
  boost::random::mt19937 noise_rng;
  boost::random::normal_distribution<double> unit_normal{0.0, 1.0};
  /// Test hook: number of upcoming WREG writes whose stored value gets bit 0 flipped. Survives RESET.
  int corrupt_next_writes = 0;
};

struct Marker {
  std::uint64_t frame_index;
  double amplitude;  // V, added to every normal-input channel of every device
};

/// Register-level model of a daisy chain of converters sharing one clock.
///
/// Single-threaded state machine. Virtual time advances only through
/// step_conversion, so streams are deterministic for a fixed seed.
class DeviceChain {
 public:
  explicit DeviceChain(ChainOptions options = {});

  void power_on_reset();

  /// Single-byte commands (everything except RREG/WREG).
  CommandResult execute_command(std::uint8_t op);
  /// Full command sequence: an opcode, or a 2-byte RREG/WREG header and WREG payload.
  CommandResult execute(std::span<const std::uint8_t> sequence);
  /// WREG: broadcast to all devices (DIN and CS are shared in daisy-chain mode).
  CommandResult write_registers(std::uint8_t address, std::span<const std::uint8_t> values);
  CommandResult read_registers(std::uint8_t address, std::size_t count);

  /// Produces the next conversion and returns it; drdy time is frame.t_conv_us.
  const ChainFrame& step_conversion();

  [[nodiscard]] ReadMode mode() const noexcept { return mode_; }
  [[nodiscard]] bool converting() const noexcept { return converting_ && !standby_; }
  [[nodiscard]] std::uint64_t frame_index() const noexcept { return frame_index_; }
  [[nodiscard]] bool has_frame() const noexcept { return has_frame_; }
  [[nodiscard]] const ChainFrame& latest_frame() const noexcept { return frame_; }
  [[nodiscard]] std::size_t device_count() const noexcept { return devices_.size(); }
  [[nodiscard]] std::size_t channel_count() const noexcept { return devices_.size() * kChannelsPerDevice; }
  [[nodiscard]] const ChainOptions& options() const noexcept { return options_; }
  [[nodiscard]] double vref() const noexcept { return options_.vref; }

  [[nodiscard]] double clock_hz() const noexcept;
  /// Output data rate implied by device 1's DR bits and the actual clock.
  [[nodiscard]] double sample_rate_hz() const noexcept;
  [[nodiscard]] double period_us() const noexcept;
  [[nodiscard]] double now_us() const noexcept { return clock_us_; }

  Device& device(std::size_t i) { return devices_.at(i); }
  [[nodiscard]] const Device& device(std::size_t i) const { return devices_.at(i); }

  void set_channel_inputs(std::size_t device, std::size_t channel, ChannelInputs inputs);
  /// Binds the same inputs to every channel of every device.
  void set_all_inputs(const ChannelInputs& inputs);
  void set_reference(SignalSource srb1_pin) { reference_ = std::move(srb1_pin); }
  void set_clock_ppm(double ppm) noexcept { options_.clock_ppm = ppm; }
  void set_noise(NoiseProfile noise) { options_.noise = noise; }
  void add_marker(Marker marker) { markers_.push_back(marker); }

  /// Internal test signal implied by CONFIG2 of device `device`.
  [[nodiscard]] SignalSource test_signal(std::size_t device = 0) const;

 private:
  void reseed();
  void fill_device(Device& dev, DeviceFrame& out, double t_s, std::uint64_t frame,
                   double marker_v) ;

  ChainOptions options_;
  std::vector<Device> devices_;
  SignalSource reference_;
  std::vector<Marker> markers_;
  ReadMode mode_ = ReadMode::Rdatac;
  bool converting_ = false;
  bool standby_ = false;
  bool has_frame_ = false;
  std::uint64_t frame_index_ = 0;
  std::uint64_t frames_since_start_ = 0;
  double start_us_ = 0.0;
  double clock_us_ = 0.0;
  ChainFrame frame_;
};

/// Internal test signal for a CONFIG2 value: square wave at f_clk/2^21
/// (CAL_FREQ=00) or f_clk/2^20 (01), DC for 11, amplitude vref/2400 per
/// CAL_AMP0 step. Throws TestModeNotConfigured when CONFIG2 does not select
/// a usable pattern.
SignalSource test_signal_for(std::uint8_t config2, double clock_hz, double vref);

}  // namespace beats::emu
