#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "beats/common/socket.hpp"
#include "beats/emu/device_chain.hpp"
#include "beats/emu/registers.hpp"

namespace beats::acq {

enum class InputMode { Normal, InputShort, TestSignal };
enum class ClockMode { Realtime, Virtual };

struct AcqConfig {
  std::size_t device_count = 4;
  double rate_hz = 4000;
  int gain = 24;
  double vref = emu::kDefaultVref;
  InputMode input = InputMode::Normal;
  bool srb1 = true;  // common reference on every negative input

  std::size_t ping_pong_capacity = 40;  // samples per half
  std::size_t fifo_capacity = 4096;     // bytes
  std::size_t packet_samples = 160;

  Endpoint server{"127.0.0.1", 5600};
  std::string session_id = "session";

  // Realtime: DRDY follows the wall clock, timestamps from the UTC clock.
  // Virtual: conversions run as fast as the pipeline drains, timestamps are
  // virtual_epoch_us + emulated conversion time.
  ClockMode clock = ClockMode::Realtime;
  std::int64_t virtual_epoch_us = 1'700'000'000'000'000;

  // Fetch cost model used for overrun accounting in virtual time.
  double spi_clock_hz = 8e6;
  double fetch_overhead_us = 10.0;

  // Front-end anti-aliasing RC (per input).
  double rc_r_ohms = 4.7e3;
  double rc_c_farads = 4.7e-9;

  [[nodiscard]] std::size_t channel_count() const noexcept { return device_count * emu::kChannelsPerDevice; }
  [[nodiscard]] double period_us() const noexcept { return 1e6 / rate_hz; }
  /// Modeled duration of one RDATA transaction for this chain length.
  [[nodiscard]] double modeled_fetch_us() const noexcept;
};

/// Emulator settings carried by the same config file (keys prefixed "emu.").
struct EmulatorSettings {
  double clock_ppm = 0.0;
  std::uint64_t seed = 1;
  bool noise = true;
  std::string source = "dc:0";     // positive inputs of every channel
  std::string reference = "dc:0";  // SRB1 pin
  std::string negative = "dc:0";   // negative inputs when SRB1 is off
  double leakage_db = 0.0;         // 0 = no common-mode leakage
  bool leakage_typical = false;    // per-channel board-like profile; overrides leakage_db

  [[nodiscard]] emu::ChainOptions chain_options(const AcqConfig& config) const;
  /// Binds sources and leakage onto a chain.
  void apply_inputs(emu::DeviceChain& chain) const;
};

struct RunConfig {
  AcqConfig acq;
  EmulatorSettings emu;
};

/// Key/value text: one `key = value` per line, '#' starts a comment.
RunConfig parse_config(std::string_view text);
RunConfig load_config_file(const std::string& path);
/// Applies one `key=value` override; throws InvalidConfig on unknown keys or bad values.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);
std::string format_config(const RunConfig& config);

/// Throws InvalidConfig for hard violations; returns warnings for soft ones.
std::vector<std::string> validate(const AcqConfig& config);

/// DR bits for a supported output rate; throws InvalidConfig otherwise.
std::uint8_t dr_bits_for(double rate_hz);

struct RegisterWrite {
  emu::Reg first;
  std::vector<std::uint8_t> values;
};

/// The register program applied by configure(), grouped into contiguous
/// WREG bursts. For the default config this is the reference table:
/// CONFIG1..3 = 0x92 0xC0 0xEC, CH1..8SET = 0x60, LOFF_SENSP/N = 0x00, MISC1 = 0x20.
std::vector<RegisterWrite> register_program(const AcqConfig& config);

}  // namespace beats::acq
