#include "beats/acq/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "beats/common/error.hpp"
#include "beats/metrics/rc.hpp"

namespace beats::acq {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig,
              "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  bad_value(key, value);
}

std::string_view to_string(InputMode m) {
  switch (m) {
    case InputMode::Normal: return "normal";
    case InputMode::InputShort: return "short";
    case InputMode::TestSignal: return "test";
  }
  return "normal";
}

}  // namespace

double AcqConfig::modeled_fetch_us() const noexcept {
  const double bits = 8.0 * static_cast<double>(1 + emu::kDeviceFrameBytes * device_count);
  return fetch_overhead_us + bits / spi_clock_hz * 1e6;
}

emu::ChainOptions EmulatorSettings::chain_options(const AcqConfig& config) const {
  emu::ChainOptions o;
  o.device_count = config.device_count;
  o.clock_ppm = clock_ppm;
  o.vref = config.vref;
  o.seed = seed;
  o.noise = noise ? emu::NoiseProfile::reference() : emu::NoiseProfile::off();
  return o;
}

void EmulatorSettings::apply_inputs(emu::DeviceChain& chain) const {
  emu::ChannelInputs in;
  in.positive = emu::parse_signal_source(source);
  in.negative = emu::parse_signal_source(negative);
  in.leakage = leakage_db > 0.0 ? emu::CommonModeLeakage::flat(leakage_db) : emu::CommonModeLeakage::none();
  chain.set_all_inputs(in);
  if (leakage_typical) {
    for (std::size_t d = 0; d < chain.device_count(); ++d)
      for (std::size_t ch = 0; ch < emu::kChannelsPerDevice; ++ch) {
        in.leakage = emu::CommonModeLeakage::typical(d * emu::kChannelsPerDevice + ch);
        chain.set_channel_inputs(d, ch, in);
      }
  }
  chain.set_reference(emu::parse_signal_source(reference));
}

void apply_setting(RunConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  AcqConfig& a = config.acq;
  EmulatorSettings& e = config.emu;
  try {
    if (key == "device_count") a.device_count = parse_number<std::size_t>(key, value);
    else if (key == "rate_hz") a.rate_hz = parse_number<double>(key, value);
    else if (key == "gain") a.gain = parse_number<int>(key, value);
    else if (key == "vref") a.vref = parse_number<double>(key, value);
    else if (key == "input") {
      if (value == "normal") a.input = InputMode::Normal;
      else if (value == "short") a.input = InputMode::InputShort;
      else if (value == "test") a.input = InputMode::TestSignal;
      else bad_value(key, value);
    }
    else if (key == "srb1") a.srb1 = parse_bool(key, value);
    else if (key == "ping_pong_capacity") a.ping_pong_capacity = parse_number<std::size_t>(key, value);
    else if (key == "fifo_capacity") a.fifo_capacity = parse_number<std::size_t>(key, value);
    else if (key == "packet_samples") a.packet_samples = parse_number<std::size_t>(key, value);
    else if (key == "server") a.server = Endpoint::parse(std::string(value));
    else if (key == "session_id") {
      if (value.empty()) bad_value(key, value);
      a.session_id = std::string(value);
    }
    else if (key == "clock") {
      if (value == "realtime") a.clock = ClockMode::Realtime;
      else if (value == "virtual") a.clock = ClockMode::Virtual;
      else bad_value(key, value);
    }
    else if (key == "virtual_epoch_us") a.virtual_epoch_us = parse_number<std::int64_t>(key, value);
    else if (key == "spi_clock_hz") a.spi_clock_hz = parse_number<double>(key, value);
    else if (key == "fetch_overhead_us") a.fetch_overhead_us = parse_number<double>(key, value);
    else if (key == "rc_r_ohms") a.rc_r_ohms = parse_number<double>(key, value);
    else if (key == "rc_c_farads") a.rc_c_farads = parse_number<double>(key, value);
    else if (key == "emu.clock_ppm") e.clock_ppm = parse_number<double>(key, value);
    else if (key == "emu.seed") e.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "emu.noise") e.noise = parse_bool(key, value);
    else if (key == "emu.source") { emu::parse_signal_source(value); e.source = std::string(value); }
    else if (key == "emu.reference") { emu::parse_signal_source(value); e.reference = std::string(value); }
    else if (key == "emu.negative") { emu::parse_signal_source(value); e.negative = std::string(value); }
    else if (key == "emu.leakage_db") e.leakage_db = parse_number<double>(key, value);
    else if (key == "emu.leakage_typical") e.leakage_typical = parse_bool(key, value);
    else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
  } catch (const Error& err) {
    if (err.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, "key '" + std::string(key) + "': " + err.what());
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
    try {
      apply_setting(config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& err) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return config;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& c) {
  const AcqConfig& a = c.acq;
  std::ostringstream o;
  o.precision(17);
  o << "device_count = " << a.device_count << '\n'
    << "rate_hz = " << a.rate_hz << '\n'
    << "gain = " << a.gain << '\n'
    << "vref = " << a.vref << '\n'
    << "input = " << to_string(a.input) << '\n'
    << "srb1 = " << (a.srb1 ? "on" : "off") << '\n'
    << "ping_pong_capacity = " << a.ping_pong_capacity << '\n'
    << "fifo_capacity = " << a.fifo_capacity << '\n'
    << "packet_samples = " << a.packet_samples << '\n'
    << "server = " << a.server.str() << '\n'
    << "session_id = " << a.session_id << '\n'
    << "clock = " << (a.clock == ClockMode::Virtual ? "virtual" : "realtime") << '\n'
    << "virtual_epoch_us = " << a.virtual_epoch_us << '\n'
    << "spi_clock_hz = " << a.spi_clock_hz << '\n'
    << "fetch_overhead_us = " << a.fetch_overhead_us << '\n'
    << "rc_r_ohms = " << a.rc_r_ohms << '\n'
    << "rc_c_farads = " << a.rc_c_farads << '\n'
    << "emu.clock_ppm = " << c.emu.clock_ppm << '\n'
    << "emu.seed = " << c.emu.seed << '\n'
    << "emu.noise = " << (c.emu.noise ? "on" : "off") << '\n'
    << "emu.source = " << c.emu.source << '\n'
    << "emu.reference = " << c.emu.reference << '\n'
    << "emu.negative = " << c.emu.negative << '\n'
    << "emu.leakage_db = " << c.emu.leakage_db << '\n'
    << "emu.leakage_typical = " << (c.emu.leakage_typical ? "true" : "false") << '\n';
  return o.str();
}

std::uint8_t dr_bits_for(double rate_hz) {
  for (const int r : {250, 500, 1000, 2000, 4000, 8000, 16000}) {
    if (rate_hz == r) return *emu::dr_bits_for_rate(r);
  }
  throw Error(ErrorCode::InvalidConfig,
              "rate_hz must be one of 250, 500, 1000, 2000, 4000, 8000, 16000 (got " + std::to_string(rate_hz) + ")");
}

std::vector<std::string> validate(const AcqConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (c.device_count < 1 || c.device_count > 4) fail("device_count must be 1..4");
  dr_bits_for(c.rate_hz);
  if (!emu::gain_to_bits(c.gain)) fail("gain must be one of 1, 2, 4, 6, 8, 12, 24");
  if (!(c.vref > 0.0)) fail("vref must be positive");
  if (c.ping_pong_capacity == 0) fail("ping_pong_capacity must be positive");
  if (c.packet_samples == 0 || c.packet_samples % c.ping_pong_capacity != 0)
    fail("packet_samples must be a positive multiple of ping_pong_capacity");
  const std::size_t record = 8 + 4 * c.device_count + 8 * c.channel_count();
  if (c.fifo_capacity < record)
    fail("fifo_capacity of " + std::to_string(c.fifo_capacity) + " bytes cannot hold one " +
         std::to_string(record) + "-byte sample record");
  if (c.session_id.empty()) fail("session_id must not be empty");
  if (!(c.spi_clock_hz > 0.0) || c.fetch_overhead_us < 0.0) fail("fetch cost model must be positive");

  std::vector<std::string> warnings;
  const double fc = metrics::rc_cutoff(c.rc_r_ohms, c.rc_c_farads);
  if (c.rate_hz / 2.0 > fc) {
    warnings.push_back("Nyquist frequency " + std::to_string(c.rate_hz / 2.0) +
                       " Hz exceeds the anti-aliasing cutoff " + std::to_string(fc) + " Hz");
  }
  if (c.modeled_fetch_us() >= c.period_us()) {
    warnings.push_back("modeled RDATA transaction (" + std::to_string(c.modeled_fetch_us()) +
                       " us) does not fit in one sample period");
  }
  return warnings;
}

std::vector<RegisterWrite> register_program(const AcqConfig& c) {
  using emu::Reg;
  const std::uint8_t dr = dr_bits_for(c.rate_hz);
  const auto gain_bits = emu::gain_to_bits(c.gain);
  if (!gain_bits) throw Error(ErrorCode::InvalidConfig, "unsupported gain " + std::to_string(c.gain));

  emu::ChannelMux mux = emu::ChannelMux::Normal;
  if (c.input == InputMode::InputShort) mux = emu::ChannelMux::InputShort;
  if (c.input == InputMode::TestSignal) mux = emu::ChannelMux::TestSignal;
  const auto chset = static_cast<std::uint8_t>((*gain_bits << emu::bits::kChSetGainShift) |
                                               static_cast<std::uint8_t>(mux));

  // CONFIG1: reserved 1, daisy-chain mode, no clock out, reserved 10, DR.
  const auto config1 = static_cast<std::uint8_t>(0x90 | dr);
  // CONFIG2: reserved 11; the internal calibration source only when it is used.
  const std::uint8_t config2 = c.input == InputMode::TestSignal ? 0xD0 : 0xC0;
  // CONFIG3: internal reference buffer on, bias reference internal, bias buffer on.
  const std::uint8_t config3 = 0xEC;

  return {
      {Reg::Config1, {config1, config2, config3}},
      {Reg::Ch1Set, std::vector<std::uint8_t>(emu::kChannelsPerDevice, chset)},
      {Reg::LoffSensP, {0x00, 0x00}},
      {Reg::Misc1, {static_cast<std::uint8_t>(c.srb1 ? emu::bits::kMisc1Srb1 : 0x00)}},
  };
}

}  // namespace beats::acq
