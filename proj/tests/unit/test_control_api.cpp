#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cmath>
#include <nlohmann/json.hpp>
#include <thread>

#include "beats/acq/engine.hpp"
#include "beats/acq/transport.hpp"
#include "beats/common/error.hpp"
#include "beats/metrics/cmrr.hpp"
#include "beats/recorder/analyzer.hpp"
#include "beats/recorder/control_api.hpp"
#include "beats/recorder/recorder.hpp"
#include "beats/recorder/session_file.hpp"
#include "beats/recorder/waveform.hpp"
#include "helpers.hpp"

using namespace beats;
using namespace beats::recorder;
using beats::testing::eventually;
using beats::testing::make_packet;
using beats::testing::TempDir;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// A recorder with its control API, plus an engine thread streaming into it.
struct LiveRig {
  TempDir dir;
  std::unique_ptr<Recorder> rec;
  std::unique_ptr<ControlServer> ctl;
  std::unique_ptr<httplib::Client> http;
  acq::RunConfig run;
  std::thread engine;
  acq::SessionReport report;

  explicit LiveRig(acq::RunConfig cfg) : run(std::move(cfg)) {
    RecorderConfig rc;
    rc.listen = {"127.0.0.1", 0};
    rc.storage_dir = dir.path();
    rc.rate_hz = run.acq.rate_hz;
    rc.packet_samples = run.acq.packet_samples;
    rec = std::make_unique<Recorder>(rc);
    rec->listen();
    ctl = std::make_unique<ControlServer>(*rec, Endpoint{"127.0.0.1", 0});
    ctl->start();
    http = std::make_unique<httplib::Client>("127.0.0.1", ctl->port());
    http->set_read_timeout(10, 0);
    run.acq.server = {"127.0.0.1", rec->port()};
  }

  void start_engine(double seconds) {
    engine = std::thread([this, seconds] {
      acq::TcpSink sink(run.acq.server);
      acq::RunLimits limits;
      limits.max_seconds = seconds;
      report = acq::run_emulated(run, sink, limits);
    });
  }

  json get(const std::string& path, int expect = 200) {
    auto r = http->Get(path);
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }
  json post(const std::string& path, const json& body, int expect = 200) {
    auto r = http->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }

  /// Reads NDJSON batches until `seconds` of points have arrived on channel 0.
  std::vector<double> stream(const std::string& query, double seconds, std::vector<json>* batches = nullptr) {
    httplib::Client c("127.0.0.1", ctl->port());
    c.set_read_timeout(10, 0);
    std::string buf;
    std::vector<double> points;
    const auto want = static_cast<std::size_t>(seconds * run.acq.rate_hz);
    c.Get("/waveform?" + query, [&](const char* data, std::size_t n) {
      buf.append(data, n);
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const auto j = json::parse(buf.substr(0, nl));
        buf.erase(0, nl + 1);
        EXPECT_EQ(j["dropped_before"], 0);
        for (double v : j["data"][0]) points.push_back(v);
        if (batches) batches->push_back(j);
      }
      return points.size() < want;
    });
    return points;
  }

  ~LiveRig() {
    if (engine.joinable()) engine.join();
    ctl->stop();
  }
};

acq::RunConfig live_config() {
  acq::RunConfig cfg;
  cfg.acq.device_count = 1;
  cfg.acq.rate_hz = 1000;
  cfg.acq.session_id = "live";
  return cfg;
}

double tone(std::span<const double> x, double rate, double f) { return metrics::tone_amplitude(x, rate, f); }

}  // namespace

TEST(ControlApi, ErrorsBeforeStream) {
  LiveRig rig(live_config());
  const auto st = rig.get("/status");
  EXPECT_EQ(st["state"], "idle");
  const auto e = rig.post("/stimulus", {{"class", "x"}}, 409);
  EXPECT_EQ(e["error"]["code"], "InvalidState");
  EXPECT_EQ(rig.post("/save", {{"on", 1}}, 400)["error"]["code"], "InvalidArgument");
  auto r = rig.http->Post("/stimulus", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(rig.get("/events"), json::array());
  EXPECT_EQ(rig.post("/undo", json::object(), 409)["error"]["code"], "InvalidState");
}

TEST(ControlApi, ConsoleRoundTripOverLiveStream) {
  auto cfg = live_config();
  cfg.emu.source = "sine:10:1e-4+sine:50:1e-4";
  LiveRig rig(cfg);
  rig.start_engine(5.0);
  ASSERT_TRUE(eventually([&] { return rig.get("/status")["packets"].get<int>() > 0; }));
  EXPECT_EQ(rig.get("/status")["state"], "receiving");

  std::vector<double> raw, filtered;
  std::thread a([&] { raw = rig.stream("channels=0&max_points=1000", 2.0); });
  std::thread b([&] { filtered = rig.stream("channels=0&max_points=1000&filter=1&mains=50", 2.0); });

  EXPECT_EQ(rig.post("/undo", json::object())["revoked"], nullptr);
  const auto pos = rig.post("/stimulus", {{"class", "positive"}, {"intensity", 4}});
  EXPECT_EQ(pos["class"], "positive");
  EXPECT_EQ(pos["intensity"], 4);
  rig.post("/stimulus", {{"class", "negative"}});
  const auto undo = rig.post("/undo", json::object());
  EXPECT_EQ(undo["revoked"]["class"], "negative");
  EXPECT_EQ(undo["revoked"]["revoked"], true);
  rig.rec->session().record_stimulus("direct", 2);
  const auto events = rig.get("/events");
  const auto direct = rig.rec->session().events();
  ASSERT_EQ(events.size(), 3u);
  ASSERT_EQ(direct.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(events[i]["id"], direct[i].id);
    EXPECT_EQ(events[i]["class"], direct[i].label);
    EXPECT_EQ(events[i]["t_utc_us"], direct[i].t_utc_us);
    EXPECT_EQ(events[i]["revoked"], direct[i].revoked);
  }
  EXPECT_EQ(rig.post("/stimulus", {{"class", "bad"}, {"intensity", 12}}, 400)["error"]["code"], "InvalidArgument");

  // Save off for a while; receiving continues and the samples count as unsaved.
  EXPECT_EQ(rig.post("/save", {{"enabled", false}})["save_enabled"], false);
  const auto before = rig.get("/status")["packets"].get<int>();
  ASSERT_TRUE(eventually([&] { return rig.get("/status")["packets"].get<int>() > before + 3; }));
  const auto mid = rig.get("/status");
  EXPECT_EQ(mid["save_enabled"], false);
  EXPECT_GT(mid["samples_unsaved"].get<int>(), 0);
  rig.post("/save", {{"enabled", true}});

  a.join();
  b.join();
  rig.engine.join();
  const auto fin = rig.rec->wait(30s);
  ASSERT_TRUE(fin);
  const auto& h = fin->header;
  EXPECT_TRUE(h.sample_count_verified);
  EXPECT_EQ(h.seq_gaps, 0u);
  EXPECT_GT(h.samples_unsaved, 0u);
  ASSERT_EQ(h.events.size(), 3u);
  EXPECT_TRUE(h.events[1].revoked);
  EXPECT_EQ(h.annotations.size(), 2u);
  EXPECT_EQ(rig.get("/status")["state"], "closed");

  // The display notch removes mains from the view only.
  ASSERT_GE(raw.size(), 2000u);
  ASSERT_GE(filtered.size(), 2000u);
  const std::span<const double> raw_tail(raw.data() + 500, 1500), filt_tail(filtered.data() + 500, 1500);
  EXPECT_NEAR(tone(raw_tail, 1000, 50), 1e-4, 5e-6);
  EXPECT_LT(tone(filt_tail, 1000, 50), 0.05e-4);
  EXPECT_NEAR(tone(filt_tail, 1000, 10), 1e-4, 2e-6);
  SessionFileReader reader(fin->path);
  std::vector<double> stored;
  reader.read_channel(0, 0, 2000, stored);
  EXPECT_NEAR(tone(stored, 1000, 50), 1e-4, 5e-6);

  const auto stop = rig.post("/session/stop", json::object());
  EXPECT_EQ(stop["session_file"], fin->path);
}

TEST(ControlApi, WaveformShowsTestSquareWave) {
  auto cfg = live_config();
  cfg.acq.input = acq::InputMode::TestSignal;
  cfg.acq.rate_hz = 250;
  LiveRig rig(cfg);
  rig.start_engine(4.0);
  std::vector<json> batches;
  const auto pts = rig.stream("channels=0,3&max_points=250&batch_ms=100", 2.0, &batches);
  ASSERT_GE(pts.size(), 500u);
  std::size_t high = 0, low = 0;
  for (double v : pts) {
    if (std::abs(v - 1.875e-3) < 2e-5) ++high;
    if (std::abs(v + 1.875e-3) < 2e-5) ++low;
  }
  EXPECT_EQ(high + low, pts.size());
  EXPECT_GT(high, 100u);
  EXPECT_GT(low, 100u);
  ASSERT_FALSE(batches.empty());
  EXPECT_EQ(batches[0]["channels"], json({0, 3}));
  EXPECT_EQ(batches[0]["t"].size(), 25u);
  rig.engine.join();
  ASSERT_TRUE(rig.rec->wait(30s));
}

TEST(ControlApi, WaveformRejectsBadChannel) {
  auto cfg = live_config();
  LiveRig rig(cfg);
  rig.start_engine(1.0);
  ASSERT_TRUE(eventually([&] { return rig.get("/status")["packets"].get<int>() > 0; }));
  auto r = rig.http->Get("/waveform?channels=99");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
  rig.engine.join();
}

TEST(Waveform, DecimationBatchingAndClamp) {
  WaveformOptions o;
  o.channels = {1};
  o.max_points_per_s = 1000;
  WaveformSubscription sub(1, o, 4000, 32);
  EXPECT_EQ(sub.decimation(), 4u);
  for (std::uint64_t s = 0; s < 5; ++s) sub.feed(make_packet(s));  // 200 ms
  std::size_t points = 0, batches = 0;
  while (auto b = sub.pop_for(0us)) {
    ++batches;
    ASSERT_EQ(b->data.size(), 1u);
    ASSERT_EQ(b->data[0].size(), b->t.size());
    points += b->t.size();
    for (std::size_t i = 1; i < b->t.size(); ++i) ASSERT_EQ(b->t[i] - b->t[i - 1], 1000);
  }
  EXPECT_EQ(batches, 10u);
  EXPECT_EQ(points, 200u);

  WaveformOptions fast;
  fast.max_points_per_s = 1e6;
  EXPECT_EQ(WaveformSubscription(2, fast, 16000, 8).decimation(), 8u);
  WaveformOptions bad;
  bad.channels = {8};
  EXPECT_THROW(WaveformSubscription(3, bad, 4000, 8), beats::Error);
}

TEST(Waveform, DetrendFlattensRamp) {
  WaveformOptions o;
  o.channels = {0};
  o.detrend = true;
  WaveformSubscription sub(1, o, 4000, 8);
  wire::DataPacket p = make_packet(0, 160, 1);
  for (std::size_t i = 0; i < 160; ++i) p.volts[i * 8] = 1e-3 + 1e-6 * static_cast<double>(i);
  sub.feed(p);
  auto b = sub.pop_for(0us);
  ASSERT_TRUE(b);
  EXPECT_TRUE(b->detrended);
  for (double v : b->data[0]) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(Analyzer, BandPowerOnAlphaSine) {
  BandPowerAnalyzer bp(2, 1000, 4.0);
  EXPECT_EQ(bp.name(), "band_power");
  for (std::uint64_t s = 0; s < 40; ++s) {
    wire::DataPacket p = make_packet(s, 100, 1);
    for (std::size_t i = 0; i < 100; ++i)
      p.volts[i * 8 + 2] = 2e-5 * std::sin(2 * 3.141592653589793 * 10.0 * static_cast<double>(s * 100 + i) / 1000.0);
    bp.consume(p);
  }
  const auto j = json::parse(bp.summary_json());
  EXPECT_GE(j["alpha_fraction"].get<double>(), 0.9);
  EXPECT_EQ(j["samples"], 4000);
}
