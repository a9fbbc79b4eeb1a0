#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "beats/common/error.hpp"
#include "beats/common/socket.hpp"
#include "beats/eval/cmrr_eval.hpp"
#include "beats/eval/delay_report.hpp"
#include "beats/acq/tap.hpp"
#include "beats/eval/loopback.hpp"
#include "beats/eval/noise_eval.hpp"
#include "beats/recorder/recorder.hpp"
#include "beats/recorder/session_file.hpp"
#include "beats/sim/soak.hpp"
#include "beats/wire/codec.hpp"
#include "helpers.hpp"

using namespace beats;
using beats::testing::TempDir;
using namespace std::chrono_literals;

TEST(NoiseEval, FourKilohertzRmsWithinTenPercent) {
  eval::NoiseEvalOptions o;
  o.samples = 1'000'000;
  const auto row = eval::eval_noise(4000, o);
  EXPECT_EQ(row.samples, 1'000'000u);
  EXPECT_NEAR(row.measured.v_rms_uv, 0.56, 0.056);
  ASSERT_TRUE(row.measured.enob);
  EXPECT_NEAR(*row.measured.enob, 17.84, 0.15);
  EXPECT_NEAR(*row.measured.dynamic_range_db, *row.measured.enob * 20 * std::log10(2.0), 1e-9);
}

TEST(NoiseEval, RejectsUnknownRate) { EXPECT_THROW(eval::eval_noise(3000, {.samples = 1000}), Error); }

TEST(CmrrEval, FlatLeakageRecovered) {
  eval::CmrrEvalOptions o;
  o.device_count = 1;
  o.frequencies_hz = {1, 10, 70};
  for (double db : {80.0, 90.0, 100.0}) {
    const auto curves = eval::measure_cmrr(o, eval::flat_leakage(db));
    ASSERT_EQ(curves.size(), 8u);
    for (const auto& c : curves) EXPECT_LE(c.max_error_db(), 1.0) << db;
  }
}

TEST(CmrrEval, NoLeakageHitsFloor) {
  eval::CmrrEvalOptions o;
  o.device_count = 1;
  o.frequencies_hz = {10};
  o.noise = false;
  const auto curves = eval::measure_cmrr(o, {});
  for (const auto& c : curves) EXPECT_TRUE(c.measured.points[0].below_floor);
}

TEST(CmrrEval, TypicalProfileAboveEighty) {
  eval::CmrrEvalOptions o;
  o.device_count = 1;
  const auto curves = eval::measure_cmrr(o, eval::typical_leakage());
  for (const auto& c : curves) {
    EXPECT_GE(c.measured.min_db(), 80.0);
    EXPECT_LE(c.max_error_db(), 1.0);
  }
  EXPECT_FALSE(eval::cmrr_csv(curves).empty());
}

TEST(DelayReport, GrowthAndAccounting) {
  eval::DelayDimension d;
  d.measured = true;
  d.max_s = 0.2;
  d.hourly_max_s = {0.1, 0.2, 0.15};
  EXPECT_DOUBLE_EQ(d.growth_ratio(3.0), 1.5);
  EXPECT_DOUBLE_EQ(d.growth_ratio(2.5), 2.0);  // last complete hour is index 1
  EXPECT_EQ(d.growth_ratio(1.0), 0.0);

  eval::DelayLossReport r;
  r.duration_h = 3;
  r.save = d;
  r.frames = 1000;
  r.packets_sent = 6;
  r.packet_samples = 160;
  r.in_flight = 40;
  EXPECT_TRUE(r.frames_accounted());
  EXPECT_TRUE(r.delay_bounded());
  EXPECT_DOUBLE_EQ(r.max_delay_s(), 0.2);
  EXPECT_NEAR(r.avg_max_delay_per_hour(), 0.2 / 3, 1e-12);
  r.save.hourly_max_s = {0.1, 0.3, 0.25};
  EXPECT_FALSE(r.delay_bounded());
}

TEST(Soak, OneSimulatedHourIsLossless) {
  sim::SoakConfig cfg;
  cfg.hours = 1;
  const auto r = sim::run_soak(cfg);
  EXPECT_EQ(r.report.mp_loss_packets, 0u);
  EXPECT_EQ(r.report.sw_loss_packets, 0u);
  EXPECT_EQ(r.report.frames, 14'400'000u);
  EXPECT_EQ(r.report.packets_sent * 160, r.report.frames);
  EXPECT_TRUE(r.report.frames_accounted());
  EXPECT_EQ(r.samples_stored, r.report.frames);
  EXPECT_TRUE(r.session.sample_count_verified);
  for (const auto* d : {&r.report.adc, &r.report.trans, &r.report.save, &r.report.plot}) {
    EXPECT_TRUE(d->measured);
    EXPECT_GT(d->max_s, 0.0);
  }
}

TEST(Soak, DeterministicForSeed) {
  sim::SoakConfig cfg;
  cfg.hours = 0.05;
  const auto a = sim::run_soak(cfg), b = sim::run_soak(cfg);
  EXPECT_EQ(a.report.to_json(), b.report.to_json());
  cfg.seed = 2;
  EXPECT_NE(sim::run_soak(cfg).report.to_json(), a.report.to_json());
}

TEST(Soak, PackagerStallsBeyondBufferingLoseFrames) {
  sim::SoakConfig cfg;
  cfg.hours = 0.25;
  cfg.model.packager_stall_per_packet = 0.01;
  cfg.model.packager_stall_max_us = 60'000;
  const auto r = sim::run_soak(cfg);
  EXPECT_GT(r.engine.pingpong_drops, 0u);
  EXPECT_GT(r.report.mp_loss_packets, 0u);
  EXPECT_EQ(r.report.mp_loss_packets, (r.engine.pingpong_drops + 159) / 160);
  EXPECT_TRUE(r.report.frames_accounted());
  EXPECT_EQ(r.report.sw_loss_packets, 0u);
}

TEST(Loopback, CleanRunAndInjectedDrop) {
  TempDir dir;
  eval::LoopbackOptions o;
  o.run.acq.clock = acq::ClockMode::Virtual;
  o.recorder.storage_dir = dir.path();
  o.limits.max_frames = 160 * 50;
  o.tap_path = dir.str("tap.bin");
  const auto clean = eval::run_loopback(o);
  EXPECT_EQ(clean.report.sw_loss_packets, 0u);
  EXPECT_EQ(clean.report.mp_loss_packets, 0u);
  EXPECT_EQ(clean.session.header.packets_received, 50u);
  EXPECT_TRUE(clean.session.header.sample_count_verified);

  // Tap and session file agree sample for sample.
  acq::TapReader tap(o.tap_path);
  recorder::SessionFileReader file(clean.session.path);
  std::vector<UtcMicros> ft;
  std::vector<std::uint32_t> fs;
  std::vector<double> fv;
  file.read_timestamps(0, 8000, ft);
  file.read_status(0, 8000, fs);
  file.read_rows(0, 8000, fv);
  UtcMicros t;
  std::vector<std::uint32_t> st;
  std::vector<double> v;
  std::size_t i = 0;
  while (tap.next(t, st, v)) {
    ASSERT_LT(i, 8000u);
    ASSERT_EQ(t, ft[i]);
    ASSERT_EQ(0, std::memcmp(st.data(), fs.data() + 4 * i, 16));
    ASSERT_EQ(0, std::memcmp(v.data(), fv.data() + 32 * i, 256));
    ++i;
  }
  EXPECT_EQ(i, 8000u);

  TempDir dir2;
  o.recorder.storage_dir = dir2.path();
  o.tap_path.clear();
  o.drop_seqs = {17};
  const auto dropped = eval::run_loopback(o);
  EXPECT_EQ(dropped.report.sw_loss_packets, 1u);
  ASSERT_EQ(dropped.session.header.holes.size(), 1u);
  EXPECT_EQ(dropped.session.header.holes[0].first_missing_seq, 17u);
  EXPECT_EQ(dropped.session.header.sample_count, 49u * 160u);
}

TEST(RecorderTcp, ProtocolErrorFinalizesWithOffset) {
  TempDir dir;
  recorder::RecorderConfig rc;
  rc.listen = {"127.0.0.1", 0};
  rc.storage_dir = dir.path();
  recorder::Recorder rec(rc);
  rec.listen();
  {
    auto s = Socket::connect({"127.0.0.1", rec.port()});
    auto good = wire::encode_packet(beats::testing::make_packet(0));
    s.send_all(good);
    std::uint8_t bad[4];
    wire::put_be32(0, bad);
    s.send_all(bad);
  }
  const auto fin = rec.wait(10s);
  ASSERT_TRUE(fin);
  EXPECT_NE(fin->header.protocol_error.find("CorruptHeader"), std::string::npos);
  EXPECT_NE(fin->header.protocol_error.find("offset"), std::string::npos);
  EXPECT_EQ(fin->header.sample_count, 160u);
}

TEST(RecorderTcp, BindConflict) {
  TempDir dir;
  auto holder = Socket::listen({"127.0.0.1", 0});
  recorder::RecorderConfig rc;
  rc.listen = {"127.0.0.1", holder.local_port()};
  rc.storage_dir = dir.path();
  recorder::Recorder rec(rc);
  try {
    rec.listen();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BindFailed);
  }
}

TEST(RecorderTcp, StopWithoutStreamGivesEmptySession) {
  TempDir dir;
  recorder::RecorderConfig rc;
  rc.listen = {"127.0.0.1", 0};
  rc.storage_dir = dir.path();
  recorder::Recorder rec(rc);
  rec.listen();
  const auto fin = rec.stop();
  EXPECT_EQ(fin.header.sample_count, 0u);
  recorder::SessionFileReader r(fin.path);
  EXPECT_EQ(r.sample_count(), 0u);
}
