#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "beats/acq/translate.hpp"
#include "beats/common/error.hpp"
#include "beats/emu/device_chain.hpp"
#include "beats/emu/emulated_adc.hpp"

using namespace beats;
using namespace beats::emu;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no beats::Error thrown";
  return ErrorCode::InvalidArgument;
}

// Start converting with every channel on the given mux and gain 24.
void start_with_mux(DeviceChain& chain, ChannelMux mux, std::uint8_t config1 = 0x92) {
  chain.execute_command(opcode::kSdatac);
  const std::uint8_t c1[] = {config1};
  chain.write_registers(addr(Reg::Config1), c1);
  std::vector<std::uint8_t> ch(8, static_cast<std::uint8_t>(0x60 | static_cast<std::uint8_t>(mux)));
  chain.write_registers(addr(Reg::Ch1Set), ch);
  chain.execute_command(opcode::kRdatac);
  chain.execute_command(opcode::kStart);
}

}  // namespace

TEST(DeviceChain, FreshChainReportsIdAndContinuousMode) {
  DeviceChain chain;
  EXPECT_EQ(chain.device(0).registers[Reg::Id] & 0x0F, 0x0E);
  EXPECT_EQ(chain.mode(), ReadMode::Rdatac);
  EXPECT_FALSE(chain.converting());
}

TEST(DeviceChain, ResetRestoresDefaultsAndIsIdempotent) {
  DeviceChain chain({.device_count = 2});
  chain.execute_command(opcode::kSdatac);
  const std::uint8_t junk[] = {0x11, 0x22, 0x33, 0x44};
  chain.write_registers(addr(Reg::Config1), junk);
  chain.execute_command(opcode::kReset);
  const auto once = chain.device(0).registers;
  chain.execute_command(opcode::kReset);
  for (std::size_t d = 0; d < 2; ++d) {
    EXPECT_EQ(chain.device(d).registers.bytes(), RegisterFile::defaults());
    EXPECT_EQ(chain.device(d).registers, once);
  }
  EXPECT_EQ(chain.mode(), ReadMode::Rdatac);
}

TEST(DeviceChain, FourDeviceChainStartsFromDefaults) {
  DeviceChain chain({.device_count = 4});
  // Power-up values from the converter's register map.
  const std::uint8_t expected[kRegisterCount] = {0x3E, 0x96, 0xC0, 0x60, 0x00, 0x61, 0x61, 0x61,
                                                 0x61, 0x61, 0x61, 0x61, 0x61, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (std::size_t d = 0; d < 4; ++d)
    for (std::size_t a = 0; a < kRegisterCount; ++a) EXPECT_EQ(chain.device(d).registers.bytes()[a], expected[a]);
}

TEST(DeviceChain, WriteThenReadConfig1) {
  DeviceChain chain;
  chain.execute_command(opcode::kSdatac);
  const std::uint8_t seq[] = {opcode::wreg(0x01), 0x00, 0x92};
  chain.execute(seq);
  const std::uint8_t rd[] = {opcode::rreg(0x01), 0x00};
  EXPECT_EQ(chain.execute(rd).data, std::vector<std::uint8_t>{0x92});
}

TEST(DeviceChain, RegisterAccessInContinuousModeRejected) {
  DeviceChain chain;
  const std::uint8_t v[] = {0x92};
  EXPECT_EQ(code_of([&] { chain.write_registers(0x01, v); }), ErrorCode::RegisterAccessInContinuousMode);
  EXPECT_EQ(code_of([&] { chain.read_registers(0x01, 1); }), ErrorCode::RegisterAccessInContinuousMode);
}

TEST(DeviceChain, ErrorPaths) {
  DeviceChain chain;
  EXPECT_EQ(code_of([&] { chain.execute_command(0xFF); }), ErrorCode::UnknownOpcode);
  EXPECT_EQ(code_of([&] { chain.execute_command(opcode::kRdata); }), ErrorCode::ReadBeforeFirstConversion);
  EXPECT_EQ(code_of([&] { chain.step_conversion(); }), ErrorCode::NotConverting);
  chain.execute_command(opcode::kSdatac);
  const std::uint8_t v[] = {0x00};
  EXPECT_EQ(code_of([&] { chain.write_registers(0x00, v); }), ErrorCode::ReadOnlyRegister);
  EXPECT_EQ(code_of([&] { chain.write_registers(0x18, v); }), ErrorCode::InvalidRegisterAddress);
  EXPECT_EQ(code_of([&] { chain.read_registers(0x17, 2); }), ErrorCode::InvalidRegisterAddress);
}

TEST(DeviceChain, RoundTripEveryWritableRegisterAndValue) {
  DeviceChain chain({.device_count = 2});
  chain.execute_command(opcode::kSdatac);
  for (std::uint8_t a = 1; a < kRegisterCount; ++a) {
    for (int v = 0; v < 256; ++v) {
      const std::uint8_t b[] = {static_cast<std::uint8_t>(v)};
      chain.write_registers(a, b);
      const auto got = chain.read_registers(a, 1).data;
      ASSERT_EQ(got.size(), 2u);
      ASSERT_EQ(got[0], v) << "address " << int(a);
      ASSERT_EQ(got[1], v);
    }
  }
}

TEST(DeviceChain, RateMapFollowsDrBits) {
  const std::pair<std::uint8_t, double> map[] = {{0b110, 250}, {0b101, 500}, {0b100, 1000}, {0b011, 2000}, {0b010, 4000}};
  for (auto [dr, rate] : map) {
    EXPECT_EQ(nominal_rate_hz(dr), rate);
    EXPECT_EQ(dr_bits_for_rate(static_cast<int>(rate)), dr);
    DeviceChain chain;
    start_with_mux(chain, ChannelMux::InputShort, static_cast<std::uint8_t>(0x90 | dr));
    EXPECT_DOUBLE_EQ(chain.sample_rate_hz(), rate);
    double prev = chain.step_conversion().t_conv_us;
    for (int i = 0; i < 1000; ++i) {
      const double t = chain.step_conversion().t_conv_us;
      ASSERT_EQ(t - prev, 1e6 / rate);
      prev = t;
    }
  }
}

TEST(DeviceChain, ClockErrorShiftsFrameSpacing) {
  ChainOptions o;
  o.clock_ppm = 24;
  o.noise = NoiseProfile::off();
  DeviceChain chain(o);
  start_with_mux(chain, ChannelMux::InputShort);
  const double t0 = chain.step_conversion().t_conv_us;
  double t = t0;
  constexpr int kFrames = 1'000'000;
  for (int i = 0; i < kFrames; ++i) t = chain.step_conversion().t_conv_us;
  const double mean = (t - t0) / kFrames;
  EXPECT_NEAR(mean, 250.0 / (1 + 24e-6), 1e-6);
  EXPECT_NEAR(mean, 249.994, 0.001);
}

TEST(DeviceChain, InputShortWithoutNoiseIsZero) {
  ChainOptions o;
  o.device_count = 2;
  o.noise = NoiseProfile::off();
  DeviceChain chain(o);
  chain.set_all_inputs({SignalSource::sine(10, 1e-3), SignalSource::dc(0.2), {}});
  start_with_mux(chain, ChannelMux::InputShort);
  for (int i = 0; i < 100; ++i) {
    const auto& f = chain.step_conversion();
    for (const auto& d : f.per_device)
      for (auto c : d.codes) ASSERT_EQ(c, 0);
  }
}

TEST(DeviceChain, DaisyChainFrameOrdering) {
  ChainOptions o;
  o.device_count = 4;
  o.noise = NoiseProfile::off();
  DeviceChain chain(o);
  // Distinguish devices by a per-device DC input.
  chain.execute_command(opcode::kSdatac);
  const std::uint8_t c1[] = {0x92};
  chain.write_registers(addr(Reg::Config1), c1);
  std::vector<std::uint8_t> ch(8, 0x60);
  chain.write_registers(addr(Reg::Ch1Set), ch);
  for (std::size_t d = 0; d < 4; ++d)
    for (std::size_t c = 0; c < 8; ++c)
      chain.set_channel_inputs(d, c, {SignalSource::dc(1e-3 * static_cast<double>(d + 1)), {}, {}});
  chain.execute_command(opcode::kRdatac);
  chain.execute_command(opcode::kStart);
  const auto& frame = chain.step_conversion();
  const auto bytes = frame.serialize();
  ASSERT_EQ(bytes.size(), 108u);
  for (std::size_t d = 0; d < 4; ++d) {
    const auto* dev = bytes.data() + 27 * d;
    EXPECT_EQ(dev[0] >> 4, 0xC) << "device " << d;
    const std::uint8_t b[3] = {dev[3], dev[4], dev[5]};
    const auto code = get_code24(std::span<const std::uint8_t, 3>(b, 3));
    EXPECT_EQ(code, encode_code(1e-3 * static_cast<double>(d + 1), 24, 4.5).code);
  }
  const auto parsed = ChainFrame::parse(bytes);
  ASSERT_EQ(parsed.per_device.size(), 4u);
  for (std::size_t d = 0; d < 4; ++d) {
    EXPECT_EQ(parsed.per_device[d].status, frame.per_device[d].status);
    EXPECT_EQ(parsed.per_device[d].codes, frame.per_device[d].codes);
  }
}

TEST(DeviceChain, NoiseRmsMatchesProfileAt4k) {
  DeviceChain chain;
  start_with_mux(chain, ChannelMux::InputShort);
  constexpr int kFrames = 100'000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < kFrames; ++i) {
    const double v = acq::translate(chain.step_conversion().per_device[0].codes[3], 24, 4.5);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / kFrames;
  const double rms = std::sqrt(sum2 / kFrames - mean * mean);
  EXPECT_NEAR(rms, 0.56e-6, 0.056e-6);
}

TEST(DeviceChain, SameSeedSameStream) {
  auto run = [](std::uint64_t seed) {
    ChainOptions o;
    o.device_count = 2;
    o.seed = seed;
    DeviceChain chain(o);
    chain.set_all_inputs({SignalSource::white_noise(5e-6, 3), {}, {}});
    start_with_mux(chain, ChannelMux::Normal);
    std::vector<std::uint8_t> all;
    for (int i = 0; i < 500; ++i) {
      const auto b = chain.step_conversion().serialize();
      all.insert(all.end(), b.begin(), b.end());
    }
    return all;
  };
  EXPECT_EQ(run(7), run(7));
  EXPECT_NE(run(7), run(8));
}

TEST(AdcCode, ReferencePoints) {
  EXPECT_EQ(encode_code(0.0, 24, 4.5).code, 0);
  EXPECT_EQ(code_to_u24(encode_code(0.1875, 24, 4.5).code), 0x7FFFFFu);
  EXPECT_EQ(code_to_u24(encode_code(-0.1875, 24, 4.5).code), 0x800001u);
  const double neg_fs = -0.1875 * 8388608.0 / 8388607.0;
  EXPECT_EQ(code_to_u24(encode_code(neg_fs, 24, 4.5).code), 0x800000u);
  EXPECT_TRUE(encode_code(1.0, 24, 4.5).saturated);
  EXPECT_EQ(encode_code(1.0, 24, 4.5).code, kCodeMax);
  EXPECT_EQ(encode_code(-1.0, 24, 4.5).code, kCodeMin);
}

TEST(AdcCode, GridRoundTripWithinHalfLsb) {
  const double lsb = 4.5 / (24 * 8388607.0);
  for (int i = 0; i <= 100'000; ++i) {
    const double v = -0.1875 + 0.375 * i / 100'000.0;
    const auto e = encode_code(v, 24, 4.5);
    ASSERT_LE(std::abs(acq::translate(e.code, 24, 4.5) - v), 0.5 * lsb * (1 + 1e-9));
  }
}

TEST(AdcCode, PackUnpack24) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<std::int32_t> dist(kCodeMin, kCodeMax);
  for (int i = 0; i < 10000; ++i) {
    const auto c = dist(rng);
    std::uint8_t b[3];
    put_code24(c, std::span<std::uint8_t, 3>(b, 3));
    ASSERT_EQ(get_code24(std::span<const std::uint8_t, 3>(b, 3)), c);
  }
}

TEST(TestSignal, FrequencyAndAmplitude) {
  const auto s = test_signal_for(0xD0, kNominalClockHz, 4.5);
  EXPECT_DOUBLE_EQ(s.frequency, 2.048e6 / 2097152.0);
  EXPECT_DOUBLE_EQ(s.frequency, 0.9765625);
  EXPECT_NEAR(s.amplitude, 1.875e-3, 1e-15);
  // One period sampled at 4 kHz integrates to zero.
  const int n = static_cast<int>(4000 / s.frequency);  // 4096 samples
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += s.value(i / 4000.0, static_cast<std::uint64_t>(i));
  EXPECT_NEAR(sum / n, 0.0, 1e-12);
  EXPECT_EQ(code_of([] { (void)test_signal_for(0x00, kNominalClockHz, 4.5); }), ErrorCode::TestModeNotConfigured);
  EXPECT_EQ(code_of([] { (void)test_signal_for(0xD2, kNominalClockHz, 4.5); }), ErrorCode::TestModeNotConfigured);
}

TEST(SignalSource, ParseAndEvaluate) {
  const auto s = parse_signal_source("sine:10:50e-6+dc:1e-3");
  EXPECT_NEAR(s.value(0.025, 0), 50e-6 + 1e-3, 1e-12);
  EXPECT_THROW(parse_signal_source("bogus:1"), Error);
}

TEST(EmulatedAdc, ByteLevelRegisterRead) {
  EmulatedAdc adc({.device_count = 2});
  adc.set_chip_select(true);
  adc.transfer(opcode::kSdatac);
  adc.transfer(opcode::rreg(0x00));
  adc.transfer(0x00);
  const auto id1 = adc.transfer(0x00);
  const auto id2 = adc.transfer(0x00);
  adc.set_chip_select(false);
  EXPECT_EQ(id1, kDeviceId);
  EXPECT_EQ(id2, kDeviceId);
}

TEST(EmulatedAdc, IllegalCommandCountedNotThrown) {
  EmulatedAdc adc;
  adc.set_chip_select(true);
  adc.transfer(opcode::wreg(0x01));  // still in RDATAC
  adc.transfer(0x00);
  adc.transfer(0x55);
  adc.set_chip_select(false);
  EXPECT_GE(adc.counters().rejected_commands, 1u);
  EXPECT_EQ(adc.with_chain([](DeviceChain& c) { return c.device(0).registers[Reg::Config1]; }), 0x96);
}

TEST(EmulatedAdc, ManualTickRaisesDrdy) {
  EmulatedAdc adc;
  int edges = 0;
  adc.set_drdy_handler([&](const DrdyEdge&) { ++edges; });
  EXPECT_FALSE(adc.tick());
  adc.set_chip_select(true);
  adc.transfer(opcode::kStart);
  adc.set_chip_select(false);
  for (int i = 0; i < 10; ++i) EXPECT_TRUE(adc.tick());
  EXPECT_EQ(edges, 10);
}
