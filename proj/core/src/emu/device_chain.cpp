#include "beats/emu/device_chain.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "beats/common/error.hpp"

namespace beats::emu {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Command classify(std::uint8_t op) {
  switch (op) {
    case opcode::kWakeup: return Command::Wakeup;
    case opcode::kStandby: return Command::Standby;
    case opcode::kReset: return Command::Reset;
    case opcode::kStart: return Command::Start;
    case opcode::kStop: return Command::Stop;
    case opcode::kRdatac: return Command::Rdatac;
    case opcode::kSdatac: return Command::Sdatac;
    case opcode::kRdata: return Command::Rdata;
    default: break;
  }
  if (opcode::is_rreg(op)) return Command::Rreg;
  if (opcode::is_wreg(op)) return Command::Wreg;
  throw Error(ErrorCode::UnknownOpcode, "unknown opcode 0x" + [op] {
    constexpr char hex[] = "0123456789ABCDEF";
    return std::string{hex[op >> 4], hex[op & 0xF]};
  }());
}

}  // namespace

// ---------------------------------------------------------------------------

NoiseProfile NoiseProfile::reference() {
  NoiseProfile p;
  p.enabled = true;
  // DR: 000=16k 001=8k 010=4k 011=2k 100=1k 101=500 110=250 111=reserved
  p.rms_by_dr = {1.12e-6, 0.79e-6, 0.56e-6, 0.40e-6, 0.28e-6, 0.20e-6, 0.14e-6, 0.14e-6};
  return p;
}

NoiseProfile NoiseProfile::off() {
  NoiseProfile p;
  p.enabled = false;
  return p;
}

double NoiseProfile::rms_for(std::uint8_t dr_bits) const noexcept {
  return enabled ? rms_by_dr[dr_bits & bits::kConfig1DrMask] : 0.0;
}

double CommonModeLeakage::cmrr_at(double frequency_hz) const noexcept {
  if (!active()) return cmrr_db;
  if (corner_hz <= 0.0) return cmrr_db;
  const double r = frequency_hz / corner_hz;
  return cmrr_db - 10.0 * std::log10(1.0 + r * r);
}

CommonModeLeakage CommonModeLeakage::typical(std::size_t channel) {
  // resistor mismatch differs per channel; a fixed scramble keeps it reproducible
  const std::size_t k = (channel * 7 + 3) % 11;
  return {106.0 + 0.8 * static_cast<double>(k), 20.0 + static_cast<double>((channel * 5) % 11)};
}

double CommonModeLeakage::dc_gain() const noexcept {
  return active() ? std::pow(10.0, -cmrr_db / 20.0) : 0.0;
}

// ---------------------------------------------------------------------------

void ChainFrame::serialize_into(std::span<std::uint8_t> out) const {
  std::size_t pos = 0;
  for (const auto& dev : per_device) {
    out[pos++] = static_cast<std::uint8_t>(dev.status >> 16);
    out[pos++] = static_cast<std::uint8_t>(dev.status >> 8);
    out[pos++] = static_cast<std::uint8_t>(dev.status);
    for (const auto code : dev.codes) {
      put_code24(code, std::span<std::uint8_t, 3>(out.data() + pos, 3));
      pos += 3;
    }
  }
}

std::vector<std::uint8_t> ChainFrame::serialize() const {
  std::vector<std::uint8_t> out(byte_size());
  serialize_into(out);
  return out;
}

ChainFrame ChainFrame::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % kDeviceFrameBytes != 0)
    throw Error(ErrorCode::InvalidArgument, "frame length is not a multiple of 27 bytes");
  ChainFrame f;
  f.per_device.resize(bytes.size() / kDeviceFrameBytes);
  std::size_t pos = 0;
  for (auto& dev : f.per_device) {
    dev.status = (std::uint32_t{bytes[pos]} << 16) | (std::uint32_t{bytes[pos + 1]} << 8) |
                 bytes[pos + 2];
    pos += kStatusBytes;
    for (auto& code : dev.codes) {
      code = get_code24(std::span<const std::uint8_t, 3>(bytes.data() + pos, 3));
      pos += 3;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------

SignalSource test_signal_for(std::uint8_t config2, double clock_hz, double vref) {
  if ((config2 & 0xC0) != 0xC0)
    throw Error(ErrorCode::TestModeNotConfigured, "CONFIG2 reserved bits 7:6 must read 11");
  const double amplitude = vref / 2400.0 * ((config2 & bits::kConfig2CalAmp0) ? 2.0 : 1.0);
  switch (config2 & bits::kConfig2CalFreqMask) {
    case 0b00: return SignalSource::square(clock_hz / 2097152.0, amplitude);  // 2^21
    case 0b01: return SignalSource::square(clock_hz / 1048576.0, amplitude);  // 2^20
    case 0b11: return SignalSource::dc(amplitude);
    default: break;
  }
  throw Error(ErrorCode::TestModeNotConfigured, "CONFIG2 CAL_FREQ=10 is not a valid test pattern");
}

// ---------------------------------------------------------------------------

DeviceChain::DeviceChain(ChainOptions options) : options_(std::move(options)) {
  if (options_.device_count == 0)
    throw Error(ErrorCode::InvalidArgument, "a chain needs at least one device");
  if (!(options_.vref > 0.0)) throw Error(ErrorCode::InvalidArgument, "vref must be positive");
  devices_.resize(options_.device_count);
  frame_.per_device.resize(options_.device_count);
  power_on_reset();
}

void DeviceChain::reseed() {
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    devices_[i].noise_rng.seed(static_cast<std::uint32_t>(mix_seed(options_.seed, i)));
    devices_[i].unit_normal.reset();
  }
}

void DeviceChain::power_on_reset() {
  for (auto& dev : devices_) {
    dev.registers.reset();
  }
  reseed();
  mode_ = ReadMode::Rdatac;
  converting_ = false;
  standby_ = false;
  has_frame_ = false;
  frame_index_ = 0;
  frames_since_start_ = 0;
  start_us_ = 0.0;
  clock_us_ = 0.0;
  frame_ = ChainFrame{};
  frame_.per_device.resize(devices_.size());
}

double DeviceChain::clock_hz() const noexcept {
  return kNominalClockHz * (1.0 + options_.clock_ppm * 1e-6);
}

double DeviceChain::sample_rate_hz() const noexcept {
  const auto dr = devices_.front().registers[Reg::Config1] & bits::kConfig1DrMask;
  return nominal_rate_hz(static_cast<std::uint8_t>(dr)) * (1.0 + options_.clock_ppm * 1e-6);
}

double DeviceChain::period_us() const noexcept {
  const auto dr = devices_.front().registers[Reg::Config1] & bits::kConfig1DrMask;
  const double nominal = 1e6 / nominal_rate_hz(static_cast<std::uint8_t>(dr));
  if (options_.clock_ppm == 0.0) return nominal;
  return nominal / (1.0 + options_.clock_ppm * 1e-6);
}

void DeviceChain::set_channel_inputs(std::size_t device, std::size_t channel, ChannelInputs inputs) {
  if (channel >= kChannelsPerDevice) throw Error(ErrorCode::InvalidArgument, "channel out of range");
  devices_.at(device).inputs[channel] = std::move(inputs);
}

void DeviceChain::set_all_inputs(const ChannelInputs& inputs) {
  for (auto& dev : devices_)
    for (auto& ch : dev.inputs) ch = inputs;
}

SignalSource DeviceChain::test_signal(std::size_t device) const {
  return test_signal_for(devices_.at(device).registers[Reg::Config2], clock_hz(), options_.vref);
}

CommandResult DeviceChain::execute_command(std::uint8_t op) {
  const Command cmd = classify(op);
  CommandResult result{cmd, {}};
  switch (cmd) {
    case Command::Wakeup:
      standby_ = false;
      break;
    case Command::Standby:
      standby_ = true;
      break;
    case Command::Reset:
      power_on_reset();
      break;
    case Command::Start:
      if (devices_.size() > 1 &&
          (devices_.front().registers[Reg::Config1] & bits::kConfig1DaisyEn))
        throw Error(ErrorCode::UnsupportedMode,
                    "multiple-readback (cascade) mode is not emulated; clear DAISY_EN");
      if (!converting_) {
        converting_ = true;
        start_us_ = clock_us_;
        frames_since_start_ = 0;
      }
      break;
    case Command::Stop:
      converting_ = false;
      break;
    case Command::Rdatac:
      mode_ = ReadMode::Rdatac;
      break;
    case Command::Sdatac:
      mode_ = ReadMode::Sdatac;
      break;
    case Command::Rdata:
      if (!has_frame_)
        throw Error(ErrorCode::ReadBeforeFirstConversion, "RDATA issued before the first DRDY");
      result.data = frame_.serialize();
      break;
    case Command::Rreg:
    case Command::Wreg:
      throw Error(ErrorCode::InvalidArgument,
                  "RREG/WREG need a two-byte header; use execute() or read/write_registers()");
  }
  return result;
}

CommandResult DeviceChain::execute(std::span<const std::uint8_t> sequence) {
  if (sequence.empty()) throw Error(ErrorCode::InvalidArgument, "empty command sequence");
  const std::uint8_t op = sequence[0];
  const Command cmd = classify(op);
  if (cmd != Command::Rreg && cmd != Command::Wreg) return execute_command(op);
  if (sequence.size() < 2) throw Error(ErrorCode::InvalidArgument, "missing RREG/WREG count byte");
  const std::size_t count = std::size_t{sequence[1]} + 1;
  const auto address = static_cast<std::uint8_t>(op & opcode::kAddressMask);
  if (cmd == Command::Rreg) return read_registers(address, count);
  if (sequence.size() != 2 + count)
    throw Error(ErrorCode::InvalidArgument, "WREG payload length does not match its count byte");
  return write_registers(address, sequence.subspan(2));
}

CommandResult DeviceChain::write_registers(std::uint8_t address, std::span<const std::uint8_t> values) {
  if (mode_ == ReadMode::Rdatac)
    throw Error(ErrorCode::RegisterAccessInContinuousMode, "WREG while in RDATAC; issue SDATAC first");
  if (values.empty() || address + values.size() > kRegisterCount)
    throw Error(ErrorCode::InvalidRegisterAddress, "WREG range exceeds the register map");
  for (auto& dev : devices_) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint8_t v = values[i];
      if (dev.corrupt_next_writes > 0 && address + i != 0) {
        v ^= 0x01;
        --dev.corrupt_next_writes;
      }
      dev.registers.write(static_cast<std::uint8_t>(address + i), v);
    }
  }
  return {Command::Wreg, {}};
}

CommandResult DeviceChain::read_registers(std::uint8_t address, std::size_t count) {
  if (mode_ == ReadMode::Rdatac)
    throw Error(ErrorCode::RegisterAccessInContinuousMode, "RREG while in RDATAC; issue SDATAC first");
  if (count == 0 || address + count > kRegisterCount)
    throw Error(ErrorCode::InvalidRegisterAddress, "RREG range exceeds the register map");
  CommandResult result{Command::Rreg, {}};
  result.data.reserve(count * devices_.size());
  for (const auto& dev : devices_)
    for (std::size_t i = 0; i < count; ++i)
      result.data.push_back(dev.registers.read(static_cast<std::uint8_t>(address + i)));
  return result;
}

void DeviceChain::fill_device(Device& dev, DeviceFrame& out, double t_s, std::uint64_t frame,
                              double marker_v) {
  const auto& regs = dev.registers;
  const bool srb1 = (regs[Reg::Misc1] & bits::kMisc1Srb1) != 0;
  const double sigma =
      options_.noise.rms_for(static_cast<std::uint8_t>(regs[Reg::Config1] & bits::kConfig1DrMask));
  bool overrange = false;
  double test_value = 0.0;
  bool test_computed = false;

  for (std::size_t ch = 0; ch < kChannelsPerDevice; ++ch) {
    const std::uint8_t set = regs[static_cast<Reg>(ch_set(ch))];
    if (set & bits::kChSetPowerDown) {
      out.codes[ch] = 0;
      continue;
    }
    const auto gain = gain_from_bits(static_cast<std::uint8_t>((set & bits::kChSetGainMask) >>
                                                               bits::kChSetGainShift));
    const double g = gain ? static_cast<double>(*gain) : 24.0;
    double v = 0.0;
    switch (static_cast<ChannelMux>(set & bits::kChSetMuxMask)) {
      case ChannelMux::Normal: {
        const auto& in = dev.inputs[ch];
        const double vp = in.positive.value(t_s, frame);
        const double vn = srb1 ? reference_.value(t_s, frame) : in.negative.value(t_s, frame);
        v = vp - vn + marker_v;
        if (in.leakage.active()) {
          double cm = 0.5 * (vp + vn);
          if (in.leakage.corner_hz > 0.0) {
            constexpr double h = 1e-6;
            const auto& neg = srb1 ? reference_ : in.negative;
            const double cm_hi = 0.5 * (in.positive.value(t_s + h, frame) + neg.value(t_s + h, frame));
            const double cm_lo = 0.5 * (in.positive.value(t_s - h, frame) + neg.value(t_s - h, frame));
            const double tau = 1.0 / (2.0 * std::numbers::pi * in.leakage.corner_hz);
            cm += tau * (cm_hi - cm_lo) / (2.0 * h);
          }
          v += in.leakage.dc_gain() * cm;
        }
        break;
      }
      case ChannelMux::TestSignal:
        if (!test_computed) {
          const std::uint8_t config2 = regs[Reg::Config2];
          if ((config2 & 0xC0) == 0xC0 && (config2 & bits::kConfig2CalFreqMask) != 0b10)
            test_value = test_signal_for(config2, clock_hz(), options_.vref).value(t_s, frame);
          test_computed = true;
        }
        v = test_value;
        break;
      default:
        // input short, and the supply/temperature/bias monitors that are not modelled
        break;
    }
    if (sigma > 0.0) v += sigma * dev.unit_normal(dev.noise_rng);
    const auto enc = encode_code(v, g, options_.vref);
    out.codes[ch] = enc.code;
    overrange |= enc.saturated;
  }
  out.status = kStatusPreamble | (overrange ? kStatusOverrange : 0u);
}

const ChainFrame& DeviceChain::step_conversion() {
  if (!converting())
    throw Error(ErrorCode::NotConverting, "step_conversion requires START (and not STANDBY)");
  ++frames_since_start_;
  const double t_us = start_us_ + static_cast<double>(frames_since_start_) * period_us();
  clock_us_ = t_us;
  const double t_s = t_us * 1e-6;

  double marker_v = 0.0;
  for (const auto& m : markers_)
    if (m.frame_index == frame_index_) marker_v += m.amplitude;

  for (std::size_t d = 0; d < devices_.size(); ++d)
    fill_device(devices_[d], frame_.per_device[d], t_s, frame_index_, marker_v);
  frame_.frame_index = frame_index_;
  frame_.t_conv_us = t_us;
  ++frame_index_;
  has_frame_ = true;
  return frame_;
}

}  // namespace beats::emu
