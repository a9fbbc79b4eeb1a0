#include <gtest/gtest.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <mutex>
#include <thread>

#include "beats/common/error.hpp"
#include "beats/recorder/analyzer.hpp"
#include "beats/recorder/segment_store.hpp"
#include "beats/recorder/sequence.hpp"
#include "beats/recorder/session.hpp"
#include "beats/recorder/session_file.hpp"
#include "beats/recorder/stimulus.hpp"
#include "helpers.hpp"

using namespace beats;
using namespace beats::recorder;
using beats::testing::eventually;
using beats::testing::make_packet;
using beats::testing::shared;
using beats::testing::TempDir;
using namespace std::chrono_literals;

namespace {

RecorderConfig config_in(const TempDir& dir, std::size_t packet_samples = 160) {
  RecorderConfig c;
  c.storage_dir = dir.path();
  c.packet_samples = packet_samples;
  c.listen.port = 0;
  return c;
}

void feed(Session& s, std::uint64_t from, std::uint64_t to, std::size_t samples = 160, UtcMicros t0 = 1'700'000'000'000'000) {
  for (auto seq = from; seq < to; ++seq) s.on_packet(shared(make_packet(seq, samples, 4, t0)));
}

// Reads the whole stored stream back and compares it to make_packet's stream.
void expect_file_matches(const std::string& path, std::uint64_t first_seq, std::uint64_t last_seq,
                         std::size_t samples = 160) {
  SessionFileReader r(path);
  ASSERT_EQ(r.sample_count(), (last_seq - first_seq) * samples);
  std::vector<UtcMicros> t;
  std::vector<std::uint32_t> st;
  std::vector<double> v;
  for (auto seq = first_seq; seq < last_seq; ++seq) {
    const auto p = make_packet(seq, samples);
    const auto start = (seq - first_seq) * samples;
    r.read_timestamps(start, samples, t);
    r.read_status(start, samples, st);
    r.read_rows(start, samples, v);
    ASSERT_EQ(t, p.t);
    ASSERT_EQ(st, p.status);
    ASSERT_EQ(0, std::memcmp(v.data(), p.volts.data(), v.size() * sizeof(double)));
  }
}

}  // namespace

TEST(Sequence, InOrderAndGap) {
  SequenceTracker s;
  for (std::uint64_t i = 0; i < 10; ++i) EXPECT_EQ(s.observe(i, 1000 * i, 1000 * i + 999, 160), SequenceTracker::Verdict::InOrder);
  EXPECT_EQ(s.packets(), 10u);
  EXPECT_EQ(s.missing_packets(), 0u);

  SequenceTracker g;
  g.observe(0, 0, 39'750, 160);
  g.observe(1, 40'000, 79'750, 160);
  EXPECT_EQ(g.observe(3, 120'000, 159'750, 160), SequenceTracker::Verdict::AfterGap);
  EXPECT_EQ(g.missing_packets(), 1u);
  ASSERT_EQ(g.holes().size(), 1u);
  const auto& h = g.holes()[0];
  EXPECT_EQ(h.first_missing_seq, 2u);
  EXPECT_EQ(h.missing_samples, 160u);
  EXPECT_EQ(h.sample_index, 320u);
  EXPECT_EQ(h.t_before_us, 79'750);
  EXPECT_EQ(h.t_after_us, 120'000);
  EXPECT_EQ(g.observe(1, 0, 0, 160), SequenceTracker::Verdict::Stale);
  EXPECT_EQ(g.stale_packets(), 1u);
  EXPECT_EQ(g.packets(), 3u);
  EXPECT_EQ(g.next_expected(), 4u);
}

TEST(Stimulus, RecordUndo) {
  StimulusLog log;
  EXPECT_FALSE(log.undo_last());
  const auto a = log.record("positive", 3, 100);
  const auto b = log.record("negative", std::nullopt, 200);
  const auto undone = log.undo_last();
  ASSERT_TRUE(undone);
  EXPECT_EQ(undone->id, b.id);
  const auto ev = log.events();
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_FALSE(ev[0].revoked);
  EXPECT_TRUE(ev[1].revoked);
  EXPECT_EQ(ev[0].intensity, 3);
  EXPECT_EQ(log.active_count(), 1u);
  EXPECT_EQ(log.undo_last()->id, a.id);
  EXPECT_FALSE(log.undo_last());
  EXPECT_THROW(log.record("", std::nullopt, 1), Error);
  EXPECT_THROW(log.record("x", 11, 1), Error);
  EXPECT_THROW(log.record("x", -1, 1), Error);
}

TEST(Stimulus, RecordThenUndoLeavesActiveLogUnchanged) {
  StimulusLog log;
  log.record("a", 1, 10);
  log.record("b", 2, 20);
  auto active = [&] {
    std::vector<StimulusEvent> out;
    for (const auto& e : log.events())
      if (!e.revoked) out.push_back(e);
    return out;
  };
  const auto before = active();
  log.record("c", std::nullopt, 30);
  log.undo_last();
  EXPECT_EQ(active(), before);
}

TEST(Align, ExactBetweenAndOutside) {
  std::vector<UtcMicros> t;
  for (int i = 0; i < 100; ++i) t.push_back(1000 + 250 * i);
  std::vector<StimulusEvent> ev = {
      {0, "exact", 1000 + 250 * 10, {}, false},
      {1, "between", 1000 + 250 * 20 + 100, {}, false},
      {2, "before", 10, {}, false},
      {3, "after", 1000 + 250 * 200, {}, false},
      {4, "revoked", 1500, {}, true},
  };
  const auto a = align(ev, t);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_TRUE(a[0].aligned);
  EXPECT_EQ(a[0].sample_index, 10u);
  EXPECT_EQ(a[0].offset_us, 0);
  EXPECT_EQ(a[1].sample_index, 21u);
  EXPECT_GT(a[1].offset_us, 0);
  EXPECT_LT(a[1].offset_us, 250);
  EXPECT_FALSE(a[2].aligned);
  EXPECT_FALSE(a[3].aligned);
  const auto shifted = align(std::span(ev).first(1), t, 500);
  EXPECT_EQ(shifted[0].sample_index, 12u);
  EXPECT_EQ(shifted[0].offset_us, 0);
}

TEST(SegmentStore, AppendReadDamageQuota) {
  TempDir dir;
  const auto p = make_packet(0, 40, 1);
  {
    SegmentStore store(dir.path() / "spill", 1, 8);
    for (std::size_t s = 0; s < 2; ++s)
      store.append(std::span(p.t).subspan(20 * s, 20), std::span(p.status).subspan(20 * s, 20),
                   std::span(p.volts).subspan(160 * s, 160));
    ASSERT_EQ(store.segments().size(), 2u);
    EXPECT_EQ(store.samples(), 40u);
    EXPECT_EQ(store.segments()[1].first_sample, 20u);
    std::vector<UtcMicros> t;
    std::vector<std::uint32_t> st;
    std::vector<double> v;
    store.read(1, t, st, v);
    EXPECT_EQ(t, std::vector<UtcMicros>(p.t.begin() + 20, p.t.end()));
    EXPECT_EQ(v, std::vector<double>(p.volts.begin() + 160, p.volts.end()));
    store.damage_segment(0);
    try {
      store.read(0, t, st, v);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::SegmentMissing);
    }
  }
  SegmentStore small(dir.path() / "small", 1, 8, 1000);
  small.append(std::span(p.t).first(10), std::span(p.status).first(10), std::span(p.volts).first(80));
  try {
    small.append(std::span(p.t).first(20), std::span(p.status).first(20), std::span(p.volts).first(160));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StorageFull);
  }
  EXPECT_EQ(small.segments().size(), 1u);
}

TEST(SessionFile, RoundTripAndCrc) {
  TempDir dir;
  SessionHeader h;
  h.session_id = "rt";
  h.device_count = 1;
  h.channel_count = 8;
  h.rate_hz = 4000;
  h.sample_count = 40;
  h.events = {{0, "x", 5, 4, false}};
  const auto p = make_packet(0, 40, 1);
  bool served = false;
  auto rows = [&](std::vector<std::uint32_t>& st, std::vector<double>& v) -> std::size_t {
    if (served) return 0;
    served = true;
    st = p.status;
    v = p.volts;
    return 40;
  };
  const auto path = dir.str("a.beats");
  write_session_file(path, h, p.t, rows);
  {
    SessionFileReader r(path);
    EXPECT_EQ(r.header().session_id, "rt");
    EXPECT_EQ(r.header().events.size(), 1u);
    std::vector<double> ch3;
    r.read_channel(3, 0, 40, ch3);
    for (std::size_t i = 0; i < 40; ++i) ASSERT_EQ(ch3[i], p.volts[i * 8 + 3]);
  }
  served = false;
  write_session_file(dir.str("b.beats"), h, p.t, rows);
  std::ifstream fa(path, std::ios::binary), fb(dir.str("b.beats"), std::ios::binary);
  const std::string a((std::istreambuf_iterator<char>(fa)), {}), b((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_EQ(a, b);

  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(a.size() - 100));
    f.put('\x5A');
  }
  try {
    SessionFileReader r(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SessionFileCorrupt);
  }
  EXPECT_NO_THROW(SessionFileReader(path, false));
}

TEST(Session, HundredMillisecondsMakeTwentySegments) {
  TempDir dir;
  auto cfg = config_in(dir, 80);
  cfg.keep_spill = true;
  Session s(cfg);
  EXPECT_EQ(s.samples_per_segment(), 20u);
  feed(s, 0, 5, 80);
  ASSERT_TRUE(eventually([&] { return s.status().samples_stored == 400; }));
  EXPECT_EQ(s.status().segments, 20u);
  for (const auto& seg : s.store()->segments()) EXPECT_EQ(seg.samples, 20u);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 400u);
  EXPECT_TRUE(r.header.sample_count_verified);
}

TEST(Session, PartialSpanFlushedAtFinalize) {
  TempDir dir;
  Session s(config_in(dir, 10));
  feed(s, 0, 41, 10);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 410u);
  EXPECT_TRUE(r.header.sample_count_verified);
  expect_file_matches(r.path, 0, 41, 10);
}

TEST(Session, SaveOffStoresNothing) {
  TempDir dir;
  Session s(config_in(dir));
  s.set_save_enabled(false);
  feed(s, 0, 10);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 0u);
  EXPECT_EQ(r.header.samples_unsaved, 1600u);
  EXPECT_EQ(r.header.packets_received, 10u);
  EXPECT_TRUE(r.header.sample_count_verified);
  SessionFileReader reader(r.path);
  EXPECT_EQ(reader.sample_count(), 0u);
}

TEST(Session, SaveToggleMidSession) {
  TempDir dir;
  Session s(config_in(dir));
  feed(s, 0, 5);
  ASSERT_TRUE(eventually([&] { return s.status().samples_stored == 800; }));
  s.set_save_enabled(false);
  feed(s, 5, 10);
  ASSERT_TRUE(eventually([&] { return s.status().samples_received == 1600 && s.status().samples_unsaved == 800; }));
  EXPECT_EQ(s.status().samples_stored, 800u);
  EXPECT_EQ(s.status().state, SessionState::Receiving);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 800u);
  EXPECT_TRUE(r.header.sample_count_verified);
  expect_file_matches(r.path, 0, 5);
}

TEST(Session, OneMinuteBitExact) {
  TempDir dir;
  Session s(config_in(dir));
  feed(s, 0, 1500);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 240'000u);
  EXPECT_EQ(r.header.seq_gaps, 0u);
  EXPECT_TRUE(r.header.sample_count_verified);
  expect_file_matches(r.path, 0, 1500);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "s1"));  // spill removed
}

TEST(Session, GapIsRecordedAsHole) {
  TempDir dir;
  Session s(config_in(dir));
  s.on_packet(shared(make_packet(0)));
  s.on_packet(shared(make_packet(1)));
  s.on_packet(shared(make_packet(3)));
  s.on_packet(shared(make_packet(1)));  // stale
  const auto r = s.finalize();
  EXPECT_EQ(r.header.seq_gaps, 1u);
  EXPECT_EQ(r.header.stale_packets, 1u);
  ASSERT_EQ(r.header.holes.size(), 1u);
  EXPECT_EQ(r.header.holes[0].missing_samples, 160u);
  EXPECT_EQ(r.header.holes[0].t_before_us, make_packet(1).t.back());
  EXPECT_EQ(r.header.holes[0].t_after_us, make_packet(3).t.front());
  EXPECT_EQ(r.header.sample_count, 480u);
  EXPECT_TRUE(r.header.sample_count_verified);
}

TEST(Session, ForeignPacketsIgnored) {
  TempDir dir;
  Session s(config_in(dir));
  wire::DataPacket probe;
  probe.session_id = "s1";
  s.on_packet(shared(probe));
  feed(s, 0, 2);
  s.on_packet(shared(make_packet(2, 160, 4, 0, "other")));
  s.on_packet(shared(make_packet(2, 160, 2)));
  EXPECT_EQ(s.status().foreign_packets, 2u);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 320u);
  EXPECT_TRUE(r.header.sample_count_verified);
}

TEST(Session, DamagedSegmentBecomesMissingRecord) {
  TempDir dir;
  Session s(config_in(dir));
  feed(s, 0, 4);
  ASSERT_TRUE(eventually([&] { return s.status().samples_stored == 640; }));
  s.store()->damage_segment(3);
  const auto r = s.finalize();
  ASSERT_EQ(r.header.missing_segments.size(), 1u);
  EXPECT_EQ(r.header.missing_segments[0].segment, 3u);
  EXPECT_EQ(r.header.missing_segments[0].samples, 20u);
  EXPECT_EQ(r.header.missing_segments[0].sample_index, 60u);
  EXPECT_EQ(r.header.sample_count, 620u);
  EXPECT_TRUE(r.header.sample_count_verified);
  SessionFileReader reader(r.path);
  std::vector<UtcMicros> t;
  reader.read_timestamps(59, 2, t);
  EXPECT_EQ(t[1] - t[0], 21 * 250);
}

TEST(Session, StorageFullRaisesAlarmAndKeepsReceiving) {
  TempDir dir;
  auto cfg = config_in(dir);
  cfg.storage_quota_bytes = 20'000;
  Session s(cfg);
  feed(s, 0, 10);
  ASSERT_TRUE(eventually([&] { return s.status().storage_full; }));
  const auto st = s.status();
  EXPECT_FALSE(st.save_enabled);
  EXPECT_FALSE(st.alarms.empty());
  try {
    s.set_save_enabled(true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StorageFull);
  }
  const auto r = s.finalize();
  EXPECT_EQ(r.header.packets_received, 10u);
  EXPECT_GT(r.header.samples_unsaved, 0u);
  EXPECT_EQ(r.header.sample_count + r.header.samples_unsaved, 1600u);
  EXPECT_TRUE(r.header.sample_count_verified);
}

TEST(Session, StimulusNeedsReceivingState) {
  TempDir dir;
  Session s(config_in(dir));
  try {
    s.record_stimulus("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidState);
  }
  s.begin();
  EXPECT_EQ(s.state(), SessionState::Receiving);
  const auto now = utc_now_us();
  feed(s, 0, 3, 160, now - 100'000);
  const auto e1 = s.record_stimulus("positive", 5);
  s.record_stimulus("negative");
  const auto undone = s.undo_last();
  ASSERT_TRUE(undone);
  EXPECT_EQ(undone->label, "negative");
  const auto r = s.finalize();
  ASSERT_EQ(r.header.events.size(), 2u);
  EXPECT_EQ(r.header.events[0].id, e1.id);
  EXPECT_TRUE(r.header.events[1].revoked);
  ASSERT_EQ(r.header.annotations.size(), 1u);
  EXPECT_THROW(s.record_stimulus("late"), Error);
}

TEST(Session, FinalizeIsIdempotent) {
  TempDir dir;
  Session s(config_in(dir));
  feed(s, 0, 2);
  const auto a = s.finalize();
  const auto b = s.finalize();
  EXPECT_EQ(a.path, b.path);
  EXPECT_EQ(a.header.to_json(), b.header.to_json());
  EXPECT_EQ(s.state(), SessionState::Closed);
  EXPECT_TRUE(s.wait_closed(0ms));
  s.on_packet(shared(make_packet(2)));  // ignored after close
  EXPECT_EQ(s.status().packets, 2u);
}

TEST(Session, CountingAnalyzerKeepsUp) {
  TempDir dir;
  Session s(config_in(dir));
  auto counter = std::make_shared<CountingAnalyzer>();
  s.register_analyzer(counter, 4096);
  feed(s, 0, 1500);
  s.finalize();
  EXPECT_EQ(counter->samples(), 240'000u);
}

namespace {

// Blocks in consume() until cancelled.
class StuckAnalyzer final : public Analyzer {
 public:
  std::string name() const override { return "stuck"; }
  void consume(const wire::DataPacket&) override {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return cancelled_; });
  }
  void cancel() override {
    {
      std::lock_guard lock(m_);
      cancelled_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  bool cancelled_ = false;
};

}  // namespace

TEST(Session, StalledAnalyzerDoesNotTouchStorage) {
  TempDir dir;
  Session s(config_in(dir));
  s.register_analyzer(std::make_shared<StuckAnalyzer>(), 8);
  feed(s, 0, 200);
  const auto st = s.status();
  ASSERT_EQ(st.analyzers.size(), 1u);
  EXPECT_GT(st.analyzers[0].queue.dropped, 0u);
  const auto r = s.finalize();
  EXPECT_EQ(r.header.sample_count, 32'000u);
  expect_file_matches(r.path, 0, 200);
}

TEST(Session, StalledWaveformSubscriberDoesNotTouchStorage) {
  TempDir dir;
  Session s(config_in(dir));
  feed(s, 0, 1);
  WaveformOptions o;
  o.queue_batches = 2;
  auto sub = s.subscribe(o);  // never popped
  feed(s, 1, 300);
  ASSERT_TRUE(eventually([&] { return sub->stats().dropped > 0; }));
  const auto r = s.finalize();
  EXPECT_TRUE(sub->closed());
  expect_file_matches(r.path, 0, 300);
}

TEST(Session, DelaysMeasuredOnlyForLiveTimestamps) {
  {
    TempDir dir;
    Session s(config_in(dir));
    feed(s, 0, 50);
    const auto r = s.finalize();
    EXPECT_EQ(r.header.save_delay.count, 0u);
    EXPECT_FALSE(s.status().delays_measured);
  }
  {
    TempDir dir;
    Session s(config_in(dir));
    feed(s, 0, 50, 160, utc_now_us() - 3'000'000);
    EXPECT_TRUE(s.status().delays_measured);
    const auto r = s.finalize();
    EXPECT_GT(r.header.save_delay.count, 0u);
    EXPECT_GT(r.header.save_delay.max_s, 0.0);
    EXPECT_LT(r.header.save_delay.max_s, 10.0);
  }
}
