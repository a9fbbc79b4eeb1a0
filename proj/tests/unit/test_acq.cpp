#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>
#include <vector>

#include "beats/acq/config.hpp"
#include "beats/acq/engine.hpp"
#include "beats/acq/ping_pong.hpp"
#include "beats/acq/sample_fifo.hpp"
#include "beats/acq/spi_host.hpp"
#include "beats/acq/translate.hpp"
#include "beats/common/error.hpp"
#include "beats/emu/emulated_adc.hpp"

using namespace beats;
using namespace beats::acq;
using namespace std::chrono_literals;

namespace {

RunConfig virtual_config(std::size_t devices = 4) {
  RunConfig cfg;
  cfg.acq.device_count = devices;
  cfg.acq.clock = ClockMode::Virtual;
  return cfg;
}

std::vector<std::uint8_t> read_back(SpiHost& spi, std::size_t devices) {
  spi.command(emu::opcode::kSdatac);
  auto regs = spi.read_registers(0, emu::kRegisterCount);
  EXPECT_EQ(regs.size(), devices * emu::kRegisterCount);
  return regs;
}

}  // namespace

TEST(Configure, DefaultProgramMatchesReferenceTable) {
  emu::EmulatedAdc adc({.device_count = 4});
  SpiHost spi(adc, 4);
  AcqConfig cfg;
  const auto r = configure(spi, cfg);
  EXPECT_EQ(r.attempts, 1);
  ASSERT_EQ(r.ids.size(), 4u);
  for (auto id : r.ids) EXPECT_EQ(id & 0x0F, 0x0E);
  spi.command(emu::opcode::kStop);
  const auto regs = read_back(spi, 4);
  for (std::size_t d = 0; d < 4; ++d) {
    const auto* b = regs.data() + d * emu::kRegisterCount;
    EXPECT_EQ(b[0x01], 0x92);
    EXPECT_EQ(b[0x02], 0xC0);
    EXPECT_EQ(b[0x03], 0xEC);
    for (int a = 0x05; a <= 0x0C; ++a) EXPECT_EQ(b[a], 0x60);
    EXPECT_EQ(b[0x0F], 0x00);
    EXPECT_EQ(b[0x10], 0x00);
    EXPECT_EQ(b[0x15], 0x20);
  }
}

TEST(Configure, RateMapsToConfig1) {
  const std::pair<double, std::uint8_t> map[] = {{250, 0x96}, {500, 0x95}, {1000, 0x94}, {2000, 0x93}, {4000, 0x92}};
  for (auto [rate, c1] : map) {
    AcqConfig cfg;
    cfg.rate_hz = rate;
    const auto prog = register_program(cfg);
    ASSERT_FALSE(prog.empty());
    ASSERT_EQ(prog.front().first, emu::Reg::Config1);
    EXPECT_EQ(prog.front().values.front(), c1) << rate;
    EXPECT_EQ(16000.0 / (1 << (c1 & 7)), rate);
  }
  EXPECT_THROW(dr_bits_for(3000), Error);
}

TEST(Configure, CorruptedIdFails) {
  emu::EmulatedAdc adc({.device_count = 2});
  adc.with_chain([](emu::DeviceChain& c) { c.device(1).registers.force_id(0x00); });
  SpiHost spi(adc, 2);
  try {
    configure(spi, AcqConfig{.device_count = 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IdCheckFailed);
  }
}

TEST(Configure, VerifyMismatchRetriesOnceThenFails) {
  {
    emu::EmulatedAdc adc;
    adc.with_chain([](emu::DeviceChain& c) { c.device(0).corrupt_next_writes = 1; });
    SpiHost spi(adc, 1);
    EXPECT_EQ(configure(spi, AcqConfig{.device_count = 1}).attempts, 2);
  }
  {
    emu::EmulatedAdc adc;
    adc.with_chain([](emu::DeviceChain& c) { c.device(0).corrupt_next_writes = 1000; });
    SpiHost spi(adc, 1);
    try {
      configure(spi, AcqConfig{.device_count = 1});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::RegisterVerifyFailed);
    }
  }
}

TEST(Config, ParseOverridesAndErrors) {
  auto cfg = parse_config("# comment\nrate_hz = 1000\ndevice_count=2\nemu.seed = 9\n");
  EXPECT_EQ(cfg.acq.rate_hz, 1000);
  EXPECT_EQ(cfg.acq.device_count, 2u);
  EXPECT_EQ(cfg.emu.seed, 9u);
  apply_setting(cfg, "gain", "12");
  EXPECT_EQ(cfg.acq.gain, 12);
  EXPECT_THROW(apply_setting(cfg, "no_such_key", "1"), Error);
  EXPECT_THROW(apply_setting(cfg, "rate_hz", "fast"), Error);
  const auto again = parse_config(format_config(cfg));
  EXPECT_EQ(format_config(again), format_config(cfg));
}

TEST(Config, ValidateHardAndSoft) {
  AcqConfig c;
  EXPECT_TRUE(validate(c).empty());
  c.fifo_capacity = 100;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.packet_samples = 150;
  EXPECT_THROW(validate(c), Error);
  // Nyquist above the 7.2 kHz RC corner is accepted with a warning.
  c = {};
  c.device_count = 1;
  c.rate_hz = 16000;
  const auto w = validate(c);
  ASSERT_FALSE(w.empty());
  EXPECT_NE(w.front().find("Nyquist"), std::string::npos);
  c.rate_hz = 8000;
  for (const auto& s : validate(c)) EXPECT_EQ(s.find("Nyquist"), std::string::npos);
}

TEST(Translate, ReferencePoints) {
  EXPECT_EQ(translate(0, 24, 4.5), 0.0);
  EXPECT_DOUBLE_EQ(translate(0x7FFFFF, 24, 4.5), 0.1875);
  const std::uint8_t ff[3] = {0xFF, 0xFF, 0xFF};
  const auto minus_one = emu::get_code24(std::span<const std::uint8_t, 3>(ff, 3));
  EXPECT_EQ(minus_one, -1);
  EXPECT_NEAR(translate(minus_one, 24, 4.5), -22.35e-9, 0.01e-9);
}

TEST(Translate, InverseOfEncodeOverRandomCodes) {
  std::mt19937 rng(11);
  std::uniform_int_distribution<std::int32_t> dist(emu::kCodeMin + 1, emu::kCodeMax - 1);
  for (int gain : {1, 6, 24}) {
    for (int i = 0; i < 100'000; ++i) {
      const auto code = dist(rng);
      ASSERT_EQ(emu::encode_code(translate(code, gain, 4.5), gain, 4.5).code, code);
    }
  }
}

TEST(SampleFifo, FifoOrder) {
  SampleFifo fifo(4096, 8);
  for (std::uint64_t v : {1ull, 2ull, 3ull}) {
    std::uint8_t rec[8];
    std::memcpy(rec, &v, 8);
    fifo.push(rec);
  }
  std::vector<std::uint8_t> out(24);
  ASSERT_EQ(fifo.pop(out, 3), 3u);
  for (std::uint64_t i = 0; i < 3; ++i) {
    std::uint64_t v;
    std::memcpy(&v, out.data() + 8 * i, 8);
    EXPECT_EQ(v, i + 1);
  }
}

TEST(SampleFifo, CapacityInRecordsAndBlockingPush) {
  SampleFifo fifo(4096, 280);
  EXPECT_EQ(fifo.capacity_records(), 14u);
  std::vector<std::uint8_t> rec(280, 7);
  for (int i = 0; i < 14; ++i) ASSERT_TRUE(fifo.try_push(rec));
  EXPECT_FALSE(fifo.try_push(rec));
  std::atomic<bool> pushed{false};
  std::thread producer([&] {
    fifo.push(rec);
    pushed = true;
  });
  std::this_thread::sleep_for(50ms);
  EXPECT_FALSE(pushed.load());
  std::vector<std::uint8_t> out(280);
  ASSERT_EQ(fifo.pop(out, 1), 1u);
  producer.join();
  EXPECT_TRUE(pushed.load());
  EXPECT_EQ(fifo.size(), 14u);
  EXPECT_GE(fifo.stats().blocked_pushes, 1u);
  fifo.close();
  std::vector<std::uint8_t> all(280 * 20);
  EXPECT_EQ(fifo.pop(all, 20), 14u);
  EXPECT_EQ(fifo.pop(all, 20), 0u);
}

TEST(PingPong, FortyFramesMakeOneHandoff) {
  PingPongBuffer pp(40, 108);
  std::vector<std::uint8_t> raw(108, 1);
  for (int i = 0; i < 40; ++i) ASSERT_TRUE(pp.append(i, i, raw));
  auto f = pp.acquire();
  ASSERT_TRUE(f);
  EXPECT_EQ(f->count, 40u);
  EXPECT_EQ(f->t[39], 39);
  pp.release(*f);
  EXPECT_EQ(pp.stats().handoffs, 1u);
  pp.close();
  EXPECT_FALSE(pp.acquire());
}

TEST(PingPong, NoFramesNoHandoff) {
  PingPongBuffer pp(40, 108);
  pp.close();
  EXPECT_FALSE(pp.acquire());
  EXPECT_EQ(pp.stats().handoffs, 0u);
  EXPECT_EQ(pp.stats().appended, 0u);
}

TEST(PingPong, DropsWhenBothHalvesBusy) {
  PingPongBuffer pp(40, 27);
  std::vector<std::uint8_t> raw(27, 0);
  for (int i = 0; i < 80; ++i) ASSERT_TRUE(pp.append(i, i, raw));
  EXPECT_FALSE(pp.has_room());
  EXPECT_FALSE(pp.append(80, 80, raw));
  EXPECT_EQ(pp.stats().dropped, 1u);
  auto f = pp.acquire();
  ASSERT_TRUE(f);
  pp.release(*f);
  EXPECT_TRUE(pp.has_room());
  pp.close();
  auto second = pp.acquire();
  ASSERT_TRUE(second);
  EXPECT_EQ(second->count, 40u);
  EXPECT_EQ(second->t[0], 40);
}

TEST(Engine, OneMinuteVirtualRunIsLossless) {
  auto cfg = virtual_config();
  MemorySink sink;
  std::vector<double> drdy_us;
  RunLimits limits;
  limits.max_frames = 240'000;
  const auto r = run_emulated(cfg, sink, limits, [&](emu::EmulatedAdc& adc) {
    adc.add_frame_observer([&](const emu::ChainFrame& f) { drdy_us.push_back(f.t_conv_us); });
  });
  EXPECT_EQ(r.frames_fetched, 240'000u);
  EXPECT_EQ(r.packets_sent, 1500u);
  EXPECT_EQ(r.in_flight, 0u);
  EXPECT_EQ(r.pingpong_drops, 0u);
  EXPECT_EQ(r.overruns, 0u);
  EXPECT_TRUE(r.lossless_accounting(160));
  EXPECT_EQ(r.stop_reason, "frame_limit");

  const auto packets = sink.packets();
  ASSERT_EQ(packets.size(), 1500u);
  ASSERT_EQ(drdy_us.size(), 240'000u);
  UtcMicros prev = 0;
  std::size_t frame = 0;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    ASSERT_EQ(p.seq, i);
    ASSERT_EQ(p.sample_count(), 160u);
    ASSERT_EQ(p.volts.size(), 160u * 32u);
    ASSERT_EQ(p.status.size(), 160u * 4u);
    ASSERT_EQ(p.t.back() - p.t.front(), 39'750);
    for (auto t : p.t) {
      ASSERT_GT(t, prev);
      prev = t;
      const double drdy = static_cast<double>(cfg.acq.virtual_epoch_us) + drdy_us[frame++];
      ASSERT_LE(std::abs(static_cast<double>(t) - drdy), 250.0);
    }
  }
}

TEST(Engine, PartialPacketIsInFlight) {
  MemorySink sink;
  RunLimits limits;
  limits.max_frames = 1000;
  const auto r = run_emulated(virtual_config(1), sink, limits);
  EXPECT_EQ(r.packets_sent, 6u);
  EXPECT_EQ(r.in_flight, 40u);
  EXPECT_TRUE(r.lossless_accounting(160));
}

TEST(Engine, NoOverrunsOverMillionFrames) {
  MemorySink sink([](const wire::DataPacket&) {});
  CallbackSink discard([](const wire::DataPacket&) {});
  RunLimits limits;
  limits.max_frames = 1'000'000;
  auto cfg = virtual_config(1);
  EXPECT_LT(cfg.acq.modeled_fetch_us(), cfg.acq.period_us());
  const auto r = run_emulated(cfg, discard, limits);
  EXPECT_EQ(r.frames_fetched, 1'000'000u);
  EXPECT_EQ(r.overruns, 0u);
  EXPECT_EQ(r.pingpong_drops, 0u);
  EXPECT_TRUE(r.lossless_accounting(160));
}

TEST(Engine, ImmediateShutdownIssuesStop) {
  const auto cfg = virtual_config();
  emu::EmulatedAdc adc(cfg.emu.chain_options(cfg.acq), emu::ClockPacing::Virtual);
  MemorySink sink;
  AcquisitionEngine engine(cfg.acq, adc, sink);
  adc.set_pacing_gate([&] { return engine.admit_conversion(); });
  std::atomic<bool> stop{true};
  RunLimits limits;
  limits.stop_flag = &stop;
  const auto r = engine.run(limits);
  adc.shutdown();
  EXPECT_EQ(r.packets_sent, 0u);
  EXPECT_EQ(sink.packet_count(), 0u);
  EXPECT_TRUE(r.lossless_accounting(160));
  EXPECT_FALSE(adc.with_chain([](emu::DeviceChain& c) { return c.converting(); }));
}

TEST(Engine, UnreachableServerFailsBeforeStart) {
  auto cfg = virtual_config();
  // Grab a free port and close it again so nothing listens there.
  std::uint16_t port;
  {
    auto l = Socket::listen({"127.0.0.1", 0});
    port = l.local_port();
  }
  emu::EmulatedAdc adc(cfg.emu.chain_options(cfg.acq), emu::ClockPacing::Virtual);
  TcpSink sink({"127.0.0.1", port});
  AcquisitionEngine engine(cfg.acq, adc, sink);
  adc.set_pacing_gate([&] { return engine.admit_conversion(); });
  try {
    engine.run({.max_frames = 1000});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportError);
  }
  adc.shutdown();
  EXPECT_EQ(engine.last_report().frames_fetched, 0u);
  EXPECT_FALSE(adc.with_chain([](emu::DeviceChain& c) { return c.converting(); }));
}

TEST(Engine, SameSeedSamePackets) {
  auto run = [] {
    MemorySink sink;
    RunLimits limits;
    limits.max_frames = 800;
    auto cfg = virtual_config(2);
    cfg.emu.source = "noise:5e-6:4";
    run_emulated(cfg, sink, limits);
    return sink.packets();
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].identical(b[i]));
}

TEST(Engine, RealtimeClockMeasuresDelays) {
  RunConfig cfg;
  cfg.acq.device_count = 1;
  cfg.acq.rate_hz = 1000;
  MemorySink sink;
  RunLimits limits;
  limits.max_frames = 480;
  const auto r = run_emulated(cfg, sink, limits);
  EXPECT_EQ(r.packets_sent, 3u);
  EXPECT_TRUE(r.delays_measured);
  EXPECT_GT(r.trans_delay.count(), 0u);
  EXPECT_LT(r.adc_delay.max_s(), 0.5);
  const auto first = sink.packets().front().t.front();
  EXPECT_LT(std::abs(first - utc_now_us()), 10'000'000);
}
