#include "beats/acq/engine.hpp"

#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "beats/acq/translate.hpp"
#include "beats/common/error.hpp"
#include "beats/emu/registers.hpp"

namespace beats::acq {

using steady = std::chrono::steady_clock;

bool SessionReport::lossless_accounting(std::size_t packet_samples) const noexcept {
  return frames_fetched == packets_sent * packet_samples + in_flight + pingpong_drops;
}

namespace {

nlohmann::json delay_json(const DelayTracker& d) {
  return {{"max_s", d.max_s()}, {"mean_s", d.mean_s()}, {"count", d.count()}, {"hourly_max_s", d.hourly_max()}};
}

}  // namespace

std::string SessionReport::to_json() const {
  nlohmann::json j = {
      {"session_id", session_id},
      {"device_count", device_count},
      {"channel_count", channel_count},
      {"rate_hz", rate_hz},
      {"clock", clock},
      {"configure_attempts", configure_attempts},
      {"warnings", warnings},
      {"frames_fetched", frames_fetched},
      {"samples_formatted", samples_formatted},
      {"packets_sent", packets_sent},
      {"samples_sent", samples_sent},
      {"in_flight", in_flight},
      {"overruns", overruns},
      {"pingpong_drops", pingpong_drops},
      {"mp_loss_packets", mp_loss_packets},
      {"fifo",
       {{"pushed", fifo.pushed},
        {"popped", fifo.popped},
        {"blocked_pushes", fifo.blocked_pushes},
        {"sustained_stalls", fifo.sustained_stalls},
        {"longest_stall_s", fifo.longest_stall_s},
        {"high_water", fifo.high_water}}},
      {"pingpong",
       {{"appended", pingpong.appended},
        {"dropped", pingpong.dropped},
        {"handoffs", pingpong.handoffs},
        {"partial_flushes", pingpong.partial_flushes}}},
      {"first_sample_us", first_sample_us},
      {"last_sample_us", last_sample_us},
      {"elapsed_s", elapsed_s},
      {"stop_reason", stop_reason},
  };
  if (delays_measured) {
    j["adc_delay"] = delay_json(adc_delay);
    j["trans_delay"] = delay_json(trans_delay);
  } else {
    j["adc_delay"] = nullptr;
    j["trans_delay"] = nullptr;
  }
  if (!error.empty()) j["error"] = error;
  return j.dump(2);
}

AcquisitionEngine::AcquisitionEngine(AcqConfig config, emu::AdcInterface& adc, PacketSink& sink)
    : config_(std::move(config)),
      adc_(adc),
      sink_(sink),
      spi_(adc, config_.device_count),
      layout_{config_.device_count, config_.channel_count()} {
  validate(config_);
}

AcquisitionEngine::~AcquisitionEngine() { adc_.set_drdy_handler({}); }

void AcquisitionEngine::signal_main() {
  { std::lock_guard lock(main_mutex_); }
  main_cv_.notify_all();
}

void AcquisitionEngine::stop() {
  stop_requested_ = true;
  signal_main();
}

bool AcquisitionEngine::admit_conversion() {
  if (!accepting_ || stop_requested_) return false;
  if (max_frames_ && admitted_.load() >= max_frames_) {
    signal_main();
    return false;
  }
  if (!pingpong_->wait_for_room()) return false;
  ++admitted_;
  return true;
}

void AcquisitionEngine::on_drdy(const emu::DrdyEdge& edge) {
  if (!accepting_ || stop_requested_) return;
  if (max_frames_ && frames_fetched_.load(std::memory_order_relaxed) >= max_frames_) {
    signal_main();
    return;
  }
  if (in_handler_.exchange(true)) {
    ++overruns_;
    return;
  }
  const auto service_start = steady::now();
  const UtcMicros wall = utc_now_us();
  {
    std::lock_guard lock(spi_mutex_);
    spi_.read_data(raw_);
  }
  UtcMicros t;
  if (config_.clock == ClockMode::Virtual) {
    t = config_.virtual_epoch_us + std::llround(edge.t_conv_us);
  } else {
    t = wall;
  }
  if (frames_fetched_ > 0 && t <= last_t_) t = last_t_ + 1;
  if (frames_fetched_ == 0) first_t_ = t;
  last_t_ = t;
  pingpong_->append(t, wall, raw_);

  if (config_.clock == ClockMode::Virtual) {
    if (config_.modeled_fetch_us() >= config_.period_us()) ++overruns_;
  } else {
    const double took_us = std::chrono::duration<double, std::micro>(steady::now() - service_start).count();
    if (took_us >= config_.period_us()) ++overruns_;
  }
  const auto n = frames_fetched_.fetch_add(1) + 1;
  in_handler_ = false;
  if (max_frames_ && n >= max_frames_) signal_main();
}

void AcquisitionEngine::format_loop() {
  std::vector<std::uint8_t> record(layout_.size());
  std::vector<std::uint32_t> status(config_.device_count);
  std::vector<double> volts(config_.channel_count());
  const double gain = config_.gain;
  const bool measure = config_.clock == ClockMode::Realtime;
  try {
    while (auto half = pingpong_->acquire()) {
      for (std::size_t i = 0; i < half->count; ++i) {
        const auto frame = half->frame(i);
        for (std::size_t d = 0; d < config_.device_count; ++d) {
          const std::uint8_t* dev = frame.data() + d * emu::kDeviceFrameBytes;
          status[d] = (std::uint32_t{dev[0]} << 16) | (std::uint32_t{dev[1]} << 8) | dev[2];
          for (std::size_t ch = 0; ch < emu::kChannelsPerDevice; ++ch) {
            const std::int32_t code =
                emu::get_code24(std::span<const std::uint8_t, 3>(dev + emu::kStatusBytes + 3 * ch, 3));
            volts[d * emu::kChannelsPerDevice + ch] = translate(code, gain, config_.vref);
          }
        }
        layout_.write(record.data(), half->t[i], status.data(), volts.data());
        fifo_->push(record);
        ++formatted_;
        if (measure) {
          const UtcMicros now = utc_now_us();
          adc_delay_.record(now, static_cast<double>(now - half->wall[i]) * 1e-6);
        }
      }
      pingpong_->release(*half);
    }
  } catch (const Error&) {
    // FIFO closed under us: only on teardown after a fatal error
  }
  fifo_->close();
}

void AcquisitionEngine::package_loop() {
  const std::size_t per_packet = config_.packet_samples;
  const std::size_t batch = fifo_->capacity_records();
  std::vector<std::uint8_t> buffer(batch * layout_.size());
  const bool measure = config_.clock == ClockMode::Realtime;

  wire::DataPacket packet;
  packet.session_id = config_.session_id;
  packet.device_count = config_.device_count;
  packet.channel_count = config_.channel_count();
  packet.reserve(per_packet);
  std::uint64_t seq = 0;
  std::uint64_t discarded = 0;
  bool failed = false;

  while (const std::size_t n = fifo_->pop(buffer, batch)) {
    for (std::size_t r = 0; r < n; ++r) {
      const std::uint8_t* rec = buffer.data() + r * layout_.size();
      if (failed) {
        ++discarded;
        continue;
      }
      packet.t.push_back(layout_.time(rec));
      const std::size_t s0 = packet.status.size(), v0 = packet.volts.size();
      packet.status.resize(s0 + packet.device_count);
      packet.volts.resize(v0 + packet.channel_count);
      layout_.read_status(rec, packet.status.data() + s0);
      layout_.read_volts(rec, packet.volts.data() + v0);
      if (packet.sample_count() < per_packet) continue;

      packet.seq = seq;
      try {
        sink_.send(packet);
        ++seq;
        packets_sent_.fetch_add(1);
        last_sent_t_ = packet.t.back();
        if (measure) {
          const UtcMicros now = utc_now_us();
          trans_delay_.record(now, static_cast<double>(now - packet.t.front()) * 1e-6);
        }
      } catch (const Error& e) {
        transport_error_ = e.what();
        failed = true;
        discarded += packet.sample_count();
        stop_requested_ = true;
        signal_main();
      }
      packet.t.clear();
      packet.status.clear();
      packet.volts.clear();
    }
  }
  in_flight_ = packet.sample_count() + discarded;
}

SessionReport AcquisitionEngine::run(const RunLimits& limits) {
  report_ = SessionReport{};
  report_.session_id = config_.session_id;
  report_.device_count = config_.device_count;
  report_.channel_count = config_.channel_count();
  report_.rate_hz = config_.rate_hz;
  report_.clock = config_.clock == ClockMode::Virtual ? "virtual" : "realtime";
  report_.warnings = validate(config_);
  report_.delays_measured = config_.clock == ClockMode::Realtime;

  pingpong_ = std::make_unique<PingPongBuffer>(config_.ping_pong_capacity, spi_.frame_bytes());
  fifo_ = std::make_unique<SampleFifo>(config_.fifo_capacity, layout_.size());
  raw_.assign(spi_.frame_bytes(), 0);
  frames_fetched_ = 0;
  admitted_ = 0;
  overruns_ = 0;
  formatted_ = 0;
  packets_sent_ = 0;
  in_flight_ = 0;
  transport_error_.clear();
  stop_requested_ = false;
  max_frames_ = limits.max_frames;
  const UtcMicros origin = utc_now_us();
  adc_delay_.reset(origin);
  trans_delay_.reset(origin);

  try {
    sink_.open(config_.session_id, config_.device_count, config_.channel_count());
  } catch (const Error& e) {
    report_.error = e.what();
    report_.stop_reason = "transport";
    throw;
  }

  adc_.set_drdy_handler([this](const emu::DrdyEdge& e) { on_drdy(e); });
  accepting_ = true;
  std::thread formatter([this] { format_loop(); });
  std::thread packager([this] { package_loop(); });

  const auto started = steady::now();
  std::string fatal;
  ErrorCode fatal_code = ErrorCode::TransportError;
  try {
    std::lock_guard lock(spi_mutex_);
    report_.configure_attempts = configure(spi_, config_).attempts;
  } catch (const Error& e) {
    fatal = e.what();
    fatal_code = e.code();
    report_.stop_reason = "device";
    std::lock_guard lock(spi_mutex_);
    spi_.command(emu::opcode::kReset);
  }

  if (fatal.empty()) {
    std::unique_lock lock(main_mutex_);
    while (true) {
      if (stop_requested_) {
        report_.stop_reason = transport_error_.empty() ? "stopped" : "transport";
        break;
      }
      if (max_frames_ && frames_fetched_.load() >= max_frames_) {
        report_.stop_reason = "frame_limit";
        break;
      }
      if (limits.stop_flag && limits.stop_flag->load()) {
        report_.stop_reason = "interrupted";
        break;
      }
      if (limits.max_seconds > 0 &&
          std::chrono::duration<double>(steady::now() - started).count() >= limits.max_seconds) {
        report_.stop_reason = "time_limit";
        break;
      }
      main_cv_.wait_for(lock, std::chrono::milliseconds(20));
    }
  }

  // teardown: STOP always goes out, then drain the pipeline
  {
    std::lock_guard lock(spi_mutex_);
    spi_.command(emu::opcode::kStop);
  }
  accepting_ = false;
  while (in_handler_.load()) std::this_thread::yield();
  report_.elapsed_s = std::chrono::duration<double>(steady::now() - started).count();
  pingpong_->close();
  formatter.join();
  packager.join();
  try {
    sink_.close();
  } catch (const Error&) {
  }
  adc_.set_drdy_handler({});

  report_.frames_fetched = frames_fetched_;
  report_.samples_formatted = formatted_;
  report_.packets_sent = packets_sent_;
  report_.samples_sent = packets_sent_ * config_.packet_samples;
  report_.in_flight = in_flight_;
  report_.overruns = overruns_;
  report_.pingpong = pingpong_->stats();
  report_.fifo = fifo_->stats();
  report_.pingpong_drops = report_.pingpong.dropped;
  report_.mp_loss_packets = (report_.pingpong_drops + config_.packet_samples - 1) / config_.packet_samples;
  report_.first_sample_us = frames_fetched_ ? first_t_ : 0;
  report_.last_sample_us = frames_fetched_ ? last_t_ : 0;
  report_.adc_delay = adc_delay_;
  report_.trans_delay = trans_delay_;

  if (!fatal.empty()) {
    report_.error = fatal;
    throw Error(fatal_code, fatal);
  }
  if (!transport_error_.empty()) {
    report_.error = transport_error_;
    throw Error(ErrorCode::TransportError, transport_error_);
  }
  return report_;
}

SessionReport run_emulated(const RunConfig& config, PacketSink& sink, const RunLimits& limits,
                           const std::function<void(emu::EmulatedAdc&)>& setup) {
  const auto pacing =
      config.acq.clock == ClockMode::Virtual ? emu::ClockPacing::Virtual : emu::ClockPacing::Realtime;
  emu::EmulatedAdc adc(config.emu.chain_options(config.acq), pacing);
  adc.with_chain([&](emu::DeviceChain& chain) { config.emu.apply_inputs(chain); });
  AcquisitionEngine engine(config.acq, adc, sink);
  if (pacing == emu::ClockPacing::Virtual) adc.set_pacing_gate([&engine] { return engine.admit_conversion(); });
  if (setup) setup(adc);
  try {
    auto report = engine.run(limits);
    adc.shutdown();
    return report;
  } catch (...) {
    adc.shutdown();
    throw;
  }
}

}  // namespace beats::acq
