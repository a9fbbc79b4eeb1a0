// beats: command line entry points for the acquisition stack.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "beats/acq/engine.hpp"
#include "beats/acq/tap.hpp"
#include "beats/common/error.hpp"
#include "beats/eval/cmrr_eval.hpp"
#include "beats/eval/delay_report.hpp"
#include "beats/eval/loopback.hpp"
#include "beats/eval/noise_eval.hpp"
#include "beats/recorder/control_api.hpp"
#include "beats/recorder/recorder.hpp"
#include "beats/recorder/session_file.hpp"
#include "beats/sim/soak.hpp"

using namespace beats;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
  std::signal(SIGPIPE, SIG_IGN);
}

// Options shared by every subcommand that builds a RunConfig.
struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", config_path, "key = value config file (default: $BEATS_CONFIG)");
    app->add_option("-s,--set", overrides, "override one setting, key=value (repeatable)");
    app->add_option("--seed", seed, "emulator noise seed");
  }

  acq::RunConfig load() const {
    acq::RunConfig cfg;
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv("BEATS_CONFIG")) path = env;
    }
    if (!path.empty()) cfg = acq::load_config_file(path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "override must be key=value: " + o);
      acq::apply_setting(cfg, o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed) cfg.emu.seed = *seed;
    return cfg;
  }
};

void print_warnings(const acq::AcqConfig& cfg) {
  for (const auto& w : acq::validate(cfg)) std::cerr << "warning: " << w << '\n';
}

void emit(bool as_json, const std::string& json_text, const std::string& text) {
  std::cout << (as_json ? json_text : text);
  if (!(as_json ? json_text : text).ends_with('\n')) std::cout << '\n';
}

std::string engine_summary(const acq::SessionReport& r, std::size_t P) {
  std::string s;
  s += "session " + r.session_id + ": " + std::to_string(r.frames_fetched) + " frames, " +
       std::to_string(r.packets_sent) + " packets, " + std::to_string(r.in_flight) + " in flight\n";
  s += "overruns " + std::to_string(r.overruns) + ", ping-pong drops " + std::to_string(r.pingpong_drops) +
       ", fifo stalls " + std::to_string(r.fifo.blocked_pushes) + "\n";
  s += std::string("accounting ") + (r.lossless_accounting(P) ? "ok" : "MISMATCH") + ", stop: " + r.stop_reason + "\n";
  if (!r.error.empty()) s += "error: " + r.error + "\n";
  return s;
}

std::string session_summary(const recorder::FinalizeResult& f) {
  const auto& h = f.header;
  std::string s = "session file " + f.path + "\n";
  s += std::to_string(h.sample_count) + " samples, " + std::to_string(h.packets_received) + " packets, " +
       std::to_string(h.seq_gaps) + " missing, " + std::to_string(h.missing_segments.size()) +
       " unreadable segments, " + std::to_string(h.samples_unsaved) + " unsaved\n";
  s += std::string("sample count ") + (h.sample_count_verified ? "verified" : "NOT verified") + ", " +
       std::to_string(h.events.size()) + " events\n";
  for (const auto& a : h.alarms) s += "alarm: " + a + "\n";
  if (!h.protocol_error.empty()) s += "protocol error: " + h.protocol_error + "\n";
  return s;
}

recorder::DelayMeasurement parse_delay_mode(const std::string& s) {
  if (s == "auto") return recorder::DelayMeasurement::Auto;
  if (s == "on") return recorder::DelayMeasurement::On;
  if (s == "off") return recorder::DelayMeasurement::Off;
  throw Error(ErrorCode::InvalidConfig, "delays must be auto, on or off");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG acquisition stack: emulator, engine, recorder and evaluation suites"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "print reports as JSON");

  // engine ------------------------------------------------------------------
  auto* engine = app.add_subcommand("engine", "run the emulated chain and stream to a recorder");
  ConfigArgs engine_cfg;
  engine_cfg.add_to(engine);
  double engine_duration = 0;
  std::uint64_t engine_frames = 0;
  bool engine_virtual = false;
  std::string engine_tap, engine_server;
  engine->add_option("--duration", engine_duration, "stop after this many wall-clock seconds");
  engine->add_option("--frames", engine_frames, "stop after this many conversions");
  engine->add_flag("--virtual", engine_virtual, "virtual clock: run as fast as the pipeline drains");
  engine->add_option("--tap", engine_tap, "also write every transmitted packet to this tap file");
  engine->add_option("--server", engine_server, "recorder endpoint host:port");

  // recorder ----------------------------------------------------------------
  auto* rec = app.add_subcommand("recorder", "accept one stream, store it and serve the control API");
  ConfigArgs rec_cfg;
  rec_cfg.add_to(rec);
  std::string rec_listen = "127.0.0.1:5600", rec_control = "127.0.0.1:5601", rec_dir = "beats-data", rec_file;
  std::string rec_delays = "auto";
  bool rec_no_save = false, rec_keep_spill = false, rec_wait_start = false;
  std::uint64_t rec_quota = 0;
  std::int64_t rec_presentation_us = 0;
  std::vector<std::size_t> rec_band_channels;
  rec->add_option("--listen", rec_listen, "stream endpoint host:port");
  rec->add_option("--control", rec_control, "control API endpoint host:port, or 'none'");
  rec->add_option("--storage-dir", rec_dir, "spill and session file directory");
  rec->add_option("--session-file", rec_file, "session file path");
  rec->add_flag("--no-save", rec_no_save, "start with saving off");
  rec->add_flag("--keep-spill", rec_keep_spill, "keep segment spill files after finalize");
  rec->add_flag("--wait-start", rec_wait_start, "do not accept a stream before POST /session/start");
  rec->add_option("--quota-bytes", rec_quota, "spill storage quota (0 = unlimited)");
  rec->add_option("--presentation-delay-us", rec_presentation_us, "stimulus presentation delay");
  rec->add_option("--delays", rec_delays, "measure save/plot delays: auto, on, off");
  rec->add_option("--band-power", rec_band_channels, "run a band-power analyzer on these channels");

  // soak --------------------------------------------------------------------
  auto* soak = app.add_subcommand("soak", "long-run delay and loss evaluation");
  ConfigArgs soak_cfg;
  soak_cfg.add_to(soak);
  double soak_hours = 24;
  bool soak_virtual = false;
  soak->add_option("--hours", soak_hours, "session length in hours");
  soak->add_flag("--virtual", soak_virtual, "simulate in virtual time instead of a wall-clock loopback run");

  // eval-noise --------------------------------------------------------------
  auto* noise = app.add_subcommand("eval-noise", "input-short noise, ENOB and dynamic range");
  double noise_rate = 0;
  std::uint64_t noise_samples = 1'000'000, noise_seed = 1;
  std::size_t noise_channel = 0;
  noise->add_option("--rate", noise_rate, "one of 250, 500, 1000, 2000, 4000 (default: all)");
  noise->add_option("--samples", noise_samples, "samples per rate");
  noise->add_option("--seed", noise_seed, "emulator noise seed");
  noise->add_option("--channel", noise_channel, "channel index");

  // eval-cmrr ---------------------------------------------------------------
  auto* cmrr = app.add_subcommand("eval-cmrr", "common-mode rejection sweep");
  std::string cmrr_leak = "typical", cmrr_csv;
  eval::CmrrEvalOptions cmrr_opts;
  cmrr->add_option("--leakage", cmrr_leak, "typical, none, or a flat CMRR in dB");
  cmrr->add_option("--rate", cmrr_opts.rate_hz, "sample rate for the sweep");
  cmrr->add_option("--duration", cmrr_opts.duration_s, "seconds per stimulus");
  cmrr->add_option("--freqs", cmrr_opts.frequencies_hz, "stimulus frequencies in Hz")->delimiter(',');
  cmrr->add_option("--seed", cmrr_opts.seed, "emulator noise seed");
  cmrr->add_option("--csv", cmrr_csv, "write the curves as CSV");

  // eval-delay --------------------------------------------------------------
  auto* delay = app.add_subcommand("eval-delay", "wall-clock loopback run with the delay/loss report");
  ConfigArgs delay_cfg;
  delay_cfg.add_to(delay);
  double delay_duration = 60;
  std::vector<std::uint64_t> delay_drops;
  std::string delay_dir = "beats-data";
  delay->add_option("--duration", delay_duration, "seconds");
  delay->add_option("--drop", delay_drops, "drop these packet sequence numbers at the transport");
  delay->add_option("--storage-dir", delay_dir, "recorder storage directory");

  // sessiondump -------------------------------------------------------------
  auto* dump = app.add_subcommand("sessiondump", "print a session file");
  std::string dump_path;
  std::size_t dump_rows = 0;
  bool dump_no_verify = false;
  dump->add_option("file", dump_path, "session file")->required();
  dump->add_option("--rows", dump_rows, "also print this many sample rows");
  dump->add_flag("--no-verify", dump_no_verify, "skip the CRC check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  install_signal_handlers();

  try {
    if (*engine) {
      auto cfg = engine_cfg.load();
      if (engine_virtual) cfg.acq.clock = acq::ClockMode::Virtual;
      if (!engine_server.empty()) cfg.acq.server = Endpoint::parse(engine_server);
      print_warnings(cfg.acq);
      acq::TcpSink tcp(cfg.acq.server);
      std::optional<acq::TapSink> tap;
      acq::PacketSink* sink = &tcp;
      if (!engine_tap.empty()) sink = &tap.emplace(tcp, engine_tap);
      acq::RunLimits limits;
      limits.max_seconds = engine_duration;
      limits.max_frames = engine_frames;
      limits.stop_flag = &g_stop;
      const auto report = acq::run_emulated(cfg, *sink, limits);
      emit(as_json, report.to_json(), engine_summary(report, cfg.acq.packet_samples));
      return 0;
    }

    if (*rec) {
      const auto cfg = rec_cfg.load();
      recorder::RecorderConfig rc;
      rc.listen = Endpoint::parse(rec_listen);
      rc.storage_dir = rec_dir;
      rc.session_file = rec_file;
      rc.rate_hz = cfg.acq.rate_hz;
      rc.gain = cfg.acq.gain;
      rc.vref = cfg.acq.vref;
      rc.packet_samples = cfg.acq.packet_samples;
      rc.save_enabled = !rec_no_save;
      rc.keep_spill = rec_keep_spill;
      rc.storage_quota_bytes = rec_quota;
      rc.presentation_delay_us = rec_presentation_us;
      rc.delays = parse_delay_mode(rec_delays);
      recorder::Recorder r(rc);
      for (auto ch : rec_band_channels)
        r.session().register_analyzer(std::make_shared<recorder::BandPowerAnalyzer>(ch, rc.rate_hz));
      std::optional<recorder::ControlServer> control;
      if (rec_control != "none") {
        control.emplace(r, Endpoint::parse(rec_control));
        control->start();
        std::cerr << "control API on " << Endpoint::parse(rec_control).host << ":" << control->port() << '\n';
      }
      if (rec_wait_start) {
        while (!g_stop && r.session().state() == recorder::SessionState::Idle)
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
      }
      r.listen();
      std::cerr << "listening on " << rc.listen.host << ":" << r.port() << '\n';
      std::optional<recorder::FinalizeResult> fin;
      while (!fin) {
        if (g_stop) {
          fin = r.stop();
          break;
        }
        fin = r.wait(std::chrono::milliseconds(200));
      }
      if (const auto err = r.receive_error(); !err.empty()) throw Error(ErrorCode::InvalidState, err);
      emit(as_json, fin->header.to_json(), session_summary(*fin));
      return 0;
    }

    if (*soak) {
      auto cfg = soak_cfg.load();
      if (soak_virtual) {
        sim::SoakConfig sc;
        sc.hours = soak_hours;
        sc.acq = cfg.acq;
        sc.seed = cfg.emu.seed;
        sc.clock_ppm = cfg.emu.clock_ppm;
        const auto r = sim::run_soak(sc, [](double h) { std::cerr << "simulated " << h << " h\n"; });
        emit(as_json, r.report.to_json(),
             r.report.table_text() + "wall time " + std::to_string(r.wall_s) + " s, frames accounted " +
                 (r.report.frames_accounted() ? "yes" : "NO") + ", delay bounded " +
                 (r.report.delay_bounded() ? "yes" : "NO") + "\n");
        return 0;
      }
      cfg.acq.clock = acq::ClockMode::Realtime;
      print_warnings(cfg.acq);
      eval::LoopbackOptions lo;
      lo.run = cfg;
      lo.recorder.storage_dir = "beats-data";
      lo.recorder.delays = recorder::DelayMeasurement::On;
      lo.limits.max_seconds = soak_hours * 3600.0;
      lo.limits.stop_flag = &g_stop;
      const auto r = eval::run_loopback(lo);
      emit(as_json, r.report.to_json(), r.report.table_text() + session_summary(r.session));
      return 0;
    }

    if (*noise) {
      eval::NoiseEvalOptions o;
      o.samples = noise_samples;
      o.seed = noise_seed;
      o.channel = noise_channel;
      std::vector<eval::NoiseEvalRow> rows;
      if (noise_rate > 0)
        rows.push_back(eval::eval_noise(noise_rate, o));
      else
        rows = eval::eval_noise_table(o);
      emit(as_json, eval::noise_table_json(rows), eval::noise_table_text(rows));
      return 0;
    }

    if (*cmrr) {
      eval::LeakageProfile profile;
      if (cmrr_leak == "typical") {
        profile = eval::typical_leakage();
      } else if (cmrr_leak == "none") {
        profile = {};
      } else {
        double db = 0;
        try {
          db = std::stod(cmrr_leak);
        } catch (const std::exception&) {
          throw Error(ErrorCode::InvalidConfig, "leakage must be typical, none or a number of dB");
        }
        profile = eval::flat_leakage(db);
      }
      const auto curves = eval::measure_cmrr(cmrr_opts, profile);
      if (!cmrr_csv.empty()) {
        std::ofstream(cmrr_csv) << eval::cmrr_csv(curves);
      }
      emit(as_json, eval::cmrr_json(curves), eval::cmrr_table_text(curves));
      return 0;
    }

    if (*delay) {
      auto cfg = delay_cfg.load();
      cfg.acq.clock = acq::ClockMode::Realtime;
      print_warnings(cfg.acq);
      eval::LoopbackOptions lo;
      lo.run = cfg;
      lo.recorder.storage_dir = delay_dir;
      lo.recorder.delays = recorder::DelayMeasurement::On;
      lo.limits.max_seconds = delay_duration;
      lo.limits.stop_flag = &g_stop;
      lo.drop_seqs = {delay_drops.begin(), delay_drops.end()};
      const auto r = eval::run_loopback(lo);
      emit(as_json, r.report.to_json(), r.report.table_text() + session_summary(r.session));
      return 0;
    }

    if (*dump) {
      recorder::SessionFileReader reader(dump_path, !dump_no_verify);
      const auto& h = reader.header();
      const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(dump_rows, reader.sample_count()));
      std::vector<UtcMicros> t;
      std::vector<std::uint32_t> status;
      std::vector<double> volts;
      if (n) {
        reader.read_timestamps(0, n, t);
        reader.read_status(0, n, status);
        reader.read_rows(0, n, volts);
      }
      if (as_json) {
        json j = json::parse(h.to_json());
        json rows = json::array();
        for (std::size_t i = 0; i < n; ++i) {
          rows.push_back({{"t", t[i]},
                          {"status", std::vector<std::uint32_t>(status.begin() + i * h.device_count,
                                                                status.begin() + (i + 1) * h.device_count)},
                          {"ch", std::vector<double>(volts.begin() + i * h.channel_count,
                                                     volts.begin() + (i + 1) * h.channel_count)}});
        }
        if (n) j["rows"] = rows;
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "session " << h.session_id << ": " << h.device_count << " devices, " << h.channel_count
                  << " channels, " << h.rate_hz << " Hz, gain " << h.gain << '\n'
                  << h.sample_count << " samples, " << h.packets_received << " packets, " << h.seq_gaps
                  << " missing packets, verified " << (h.sample_count_verified ? "yes" : "no") << '\n'
                  << h.events.size() << " events, " << h.annotations.size() << " annotations\n";
        for (const auto& e : h.events)
          std::cout << "  event " << e.id << " " << e.label << " t=" << e.t_utc_us << (e.revoked ? " (revoked)" : "")
                    << '\n';
        for (std::size_t i = 0; i < n; ++i) {
          std::cout << t[i];
          for (std::size_t c = 0; c < h.channel_count; ++c) std::cout << ' ' << volts[i * h.channel_count + c];
          std::cout << '\n';
        }
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << '\n';
    return 1;
  }
  return 2;
}
