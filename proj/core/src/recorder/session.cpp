#include "beats/recorder/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "beats/common/error.hpp"

namespace beats::recorder {

using Packet = std::shared_ptr<const wire::DataPacket>;

std::string_view to_string(SessionState s) noexcept {
  switch (s) {
    case SessionState::Idle: return "idle";
    case SessionState::Receiving: return "receiving";
    case SessionState::Finalizing: return "finalizing";
    case SessionState::Closed: return "closed";
  }
  return "unknown";
}

namespace {

nlohmann::json queue_json(const QueueStats& q) {
  return {{"pushed", q.pushed},         {"popped", q.popped}, {"dropped", q.dropped},
          {"blocked_pushes", q.blocked_pushes}, {"alarms", q.alarms}, {"high_water", q.high_water}};
}

nlohmann::json delay_json(const DelayTracker& d) {
  return {{"max_s", d.max_s()}, {"mean_s", d.mean_s()}, {"count", d.count()}, {"hourly_max_s", d.hourly_max()}};
}

DelaySummary summarize(const DelayTracker& d) { return {d.max_s(), d.mean_s(), d.count(), d.hourly_max()}; }

}  // namespace

std::string SessionStatus::to_json() const {
  nlohmann::json analyzers_j = nlohmann::json::array();
  for (const auto& a : analyzers) {
    analyzers_j.push_back({{"name", a.name},
                           {"queue", queue_json(a.queue)},
                           {"consumed_packets", a.consumed_packets},
                           {"summary", nlohmann::json::parse(a.summary_json, nullptr, false)}});
  }
  nlohmann::json subs_j = nlohmann::json::array();
  for (const auto& [id, q] : subscribers) subs_j.push_back({{"id", id}, {"queue", queue_json(q)}});
  nlohmann::json j = {
      {"state", std::string(to_string(state))},
      {"session_id", session_id},
      {"device_count", device_count},
      {"channel_count", channel_count},
      {"save_enabled", save_enabled},
      {"storage_full", storage_full},
      {"packets", packets},
      {"seq_gaps", seq_gaps},
      {"stale_packets", stale_packets},
      {"foreign_packets", foreign_packets},
      {"bytes_received", bytes_received},
      {"samples_received", samples_received},
      {"samples_stored", samples_stored},
      {"samples_unsaved", samples_unsaved},
      {"segments", segments},
      {"events", events},
      {"alarms", alarms},
      {"protocol_error", protocol_error},
      {"queues", {{"storage", queue_json(storage_queue)}, {"visual", queue_json(visual_queue)}}},
      {"analyzers", analyzers_j},
      {"subscribers", subs_j},
      {"delays_measured", delays_measured},
      {"session_file", session_file},
  };
  if (delays_measured) {
    j["delays"] = {{"save", delay_json(save_delay)}, {"plot", delay_json(plot_delay)}};
  } else {
    j["delays"] = nullptr;
  }
  return j.dump(2);
}

Session::Session(RecorderConfig config)
    : config_(std::move(config)),
      per_segment_(recorder::samples_per_segment(config_.rate_hz)),
      seq_(config_.packet_samples),
      storage_q_(config_.storage_queue_packets),
      visual_q_(config_.visual_queue_packets),
      save_enabled_(config_.save_enabled) {
  if (!(config_.rate_hz > 0.0) || config_.packet_samples == 0)
    throw Error(ErrorCode::InvalidConfig, "recorder needs a positive rate and packet size");
  const UtcMicros now = utc_now_us();
  save_delay_.reset(now);
  plot_delay_.reset(now);
  measure_delays_ = config_.delays == DelayMeasurement::On;
  storage_thread_ = std::thread([this] { storage_loop(); });
  visual_thread_ = std::thread([this] { visual_loop(); });
}

Session::~Session() { stop_workers(); }

void Session::alarm(const std::string& text) {
  std::lock_guard lock(alarm_mutex_);
  alarms_.push_back(text);
}

SessionState Session::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

bool Session::wait_closed(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(state_mutex_);
  return state_cv_.wait_for(lock, timeout, [&] { return state_ == SessionState::Closed; });
}

void Session::begin() {
  {
    std::lock_guard lock(state_mutex_);
    if (state_ != SessionState::Idle) throw Error(ErrorCode::InvalidState, "session already started");
    state_ = SessionState::Receiving;
  }
  state_cv_.notify_all();
}

void Session::init_stream_locked(const wire::DataPacket& first) {
  session_id_ = first.session_id;
  devices_ = first.device_count;
  channels_ = first.channel_count;
  stream_known_ = true;
  std::lock_guard lock(storage_mutex_);
  store_ = std::make_unique<SegmentStore>(config_.storage_dir / (session_id_.empty() ? "session" : session_id_),
                                          devices_, channels_, config_.storage_quota_bytes);
}

void Session::on_packet(Packet packet) {
  {
    std::lock_guard lock(state_mutex_);
    if (state_ == SessionState::Idle) state_ = SessionState::Receiving;
    if (state_ != SessionState::Receiving) return;
    if (packet->is_probe()) {
      // handshake: no samples, so no dimensions to check
      if (stream_known_ && packet->session_id != session_id_) ++foreign_;
      return;
    }
    if (!stream_known_) init_stream_locked(*packet);
    if (packet->session_id != session_id_ || packet->device_count != devices_ ||
        packet->channel_count != channels_) {
      ++foreign_;
      return;
    }
    const bool first = seq_.packets() == 0;
    if (seq_.observe(packet->seq, packet->t.front(), packet->t.back(), packet->sample_count()) ==
        SequenceTracker::Verdict::Stale)
      return;
    if (first && config_.delays == DelayMeasurement::Auto)
      measure_delays_ = std::llabs(packet->t.front() - utc_now_us()) < 600'000'000LL;
  }

  storage_q_.push_blocking(packet);
  if (const auto alarms = storage_q_.stats().alarms; alarms != storage_alarms_seen_) {
    storage_alarms_seen_ = alarms;
    alarm("storage queue blocked the receive path for more than 1 s");
  }
  visual_q_.push_drop_oldest(packet);
  std::lock_guard lock(analyzer_mutex_);
  for (auto& slot : analyzers_) slot->queue->push_drop_oldest(packet);
}

void Session::on_protocol_error(const std::string& message) {
  {
    std::lock_guard lock(state_mutex_);
    protocol_error_ = message;
  }
  alarm("protocol error: " + message);
}

void Session::set_save_enabled(bool enabled) {
  const auto s = state();
  if (s != SessionState::Idle && s != SessionState::Receiving)
    throw Error(ErrorCode::InvalidState, "save can only be toggled before or during a session");
  if (enabled && storage_full_) throw Error(ErrorCode::StorageFull, "storage is full; saving stays off");
  save_enabled_ = enabled;
}

StimulusEvent Session::record_stimulus(std::string label, std::optional<int> intensity) {
  const UtcMicros now = utc_now_us();
  if (state() != SessionState::Receiving)
    throw Error(ErrorCode::InvalidState, "stimuli can only be recorded while receiving");
  return stimuli_.record(std::move(label), intensity, now);
}

std::optional<StimulusEvent> Session::undo_last() {
  if (state() != SessionState::Receiving)
    throw Error(ErrorCode::InvalidState, "undo is only available while receiving");
  return stimuli_.undo_last();
}

void Session::register_analyzer(std::shared_ptr<Analyzer> analyzer, std::size_t queue_packets) {
  auto slot = std::make_unique<AnalyzerSlot>();
  slot->analyzer = std::move(analyzer);
  slot->queue = std::make_unique<BoundedQueue<Packet>>(queue_packets ? queue_packets : config_.analysis_queue_packets);
  AnalyzerSlot* raw = slot.get();
  raw->thread = std::thread([raw] {
    while (auto p = raw->queue->pop()) {
      raw->analyzer->consume(**p);
      ++raw->consumed;
    }
  });
  std::lock_guard lock(analyzer_mutex_);
  analyzers_.push_back(std::move(slot));
}

std::shared_ptr<WaveformSubscription> Session::subscribe(WaveformOptions options) {
  std::size_t channels = 0;
  {
    std::lock_guard lock(state_mutex_);
    if (!stream_known_) throw Error(ErrorCode::InvalidState, "no stream yet; subscribe once data arrives");
    if (state_ != SessionState::Receiving) throw Error(ErrorCode::InvalidState, "session is not receiving");
    channels = channels_;
  }
  std::lock_guard lock(visual_mutex_);
  auto sub = std::make_shared<WaveformSubscription>(next_subscriber_++, std::move(options), config_.rate_hz, channels);
  subscribers_.push_back(sub);
  return sub;
}

void Session::unsubscribe(std::uint64_t id) {
  std::lock_guard lock(visual_mutex_);
  for (auto& s : subscribers_) {
    if (s->id() == id) s->close();
  }
  std::erase_if(subscribers_, [id](const auto& s) { return s->id() == id; });
}

void Session::cut_segment(std::size_t n) {
  const std::span<const UtcMicros> t(pend_t_.data() + pend_pos_, n);
  if (save_enabled_ && !storage_full_) {
    try {
      store_->append(t, {pend_status_.data() + pend_pos_ * devices_, n * devices_},
                     {pend_volts_.data() + pend_pos_ * channels_, n * channels_});
      if (measuring()) {
        const UtcMicros now = utc_now_us();
        save_delay_.record(now, static_cast<double>(now - t.front()) * 1e-6);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StorageFull) throw;
      storage_full_ = true;
      save_enabled_ = false;
      alarm(std::string("storage full, saving stopped: ") + e.what());
      samples_unsaved_ += n;
    }
  } else {
    samples_unsaved_ += n;
  }
  pend_pos_ += n;
}

std::vector<SegmentInfo> Session::store_tick() {
  std::lock_guard lock(storage_mutex_);
  storage_q_.drain(drained_);
  if (!store_) {
    drained_.clear();
    return {};
  }
  for (const auto& p : drained_) {
    pend_t_.insert(pend_t_.end(), p->t.begin(), p->t.end());
    pend_status_.insert(pend_status_.end(), p->status.begin(), p->status.end());
    pend_volts_.insert(pend_volts_.end(), p->volts.begin(), p->volts.end());
  }
  drained_.clear();
  const std::size_t before = store_->segments().size();
  while (pend_t_.size() - pend_pos_ >= per_segment_) cut_segment(per_segment_);
  if (pend_pos_ > 0 && pend_pos_ * 2 >= pend_t_.size()) {
    pend_t_.erase(pend_t_.begin(), pend_t_.begin() + static_cast<std::ptrdiff_t>(pend_pos_));
    pend_status_.erase(pend_status_.begin(), pend_status_.begin() + static_cast<std::ptrdiff_t>(pend_pos_ * devices_));
    pend_volts_.erase(pend_volts_.begin(), pend_volts_.begin() + static_cast<std::ptrdiff_t>(pend_pos_ * channels_));
    pend_pos_ = 0;
  }
  const auto& segs = store_->segments();
  return {segs.begin() + static_cast<std::ptrdiff_t>(before), segs.end()};
}

void Session::storage_loop() {
  while (!workers_stop_) {
    if (auto p = storage_q_.pop_for(config_.storage_period)) {
      std::lock_guard lock(storage_mutex_);
      drained_.push_back(std::move(*p));
    }
    store_tick();
  }
}

void Session::visual_loop() {
  std::vector<Packet> batch;
  auto next = std::chrono::steady_clock::now();
  while (!workers_stop_) {
    next += config_.visual_period;
    std::this_thread::sleep_until(next);
    const auto now_steady = std::chrono::steady_clock::now();
    if (now_steady - next > 10 * config_.visual_period) next = now_steady;  // do not try to catch up
    batch.clear();
    if (visual_q_.drain(batch) == 0) continue;
    std::lock_guard lock(visual_mutex_);
    std::erase_if(subscribers_, [](const auto& s) { return s->closed(); });
    for (const auto& sub : subscribers_) {
      for (const auto& p : batch) sub->feed(*p);
    }
    if (measuring()) {
      const UtcMicros now = utc_now_us();
      plot_delay_.record(now, static_cast<double>(now - batch.front()->t.front()) * 1e-6);
    }
  }
}

void Session::stop_workers() {
  if (workers_joined_) return;
  workers_stop_ = true;
  if (storage_thread_.joinable()) storage_thread_.join();
  if (visual_thread_.joinable()) visual_thread_.join();
  std::vector<AnalyzerSlot*> slots;
  {
    std::lock_guard lock(analyzer_mutex_);
    for (auto& s : analyzers_) slots.push_back(s.get());
  }
  for (auto* s : slots) {
    s->queue->close();
    s->analyzer->cancel();
  }
  for (auto* s : slots) {
    if (s->thread.joinable()) s->thread.join();
  }
  {
    std::lock_guard lock(visual_mutex_);
    for (auto& sub : subscribers_) sub->close();
  }
  workers_joined_ = true;
}

FinalizeResult Session::finalize() {
  {
    std::unique_lock lock(state_mutex_);
    if (state_ == SessionState::Finalizing) {
      state_cv_.wait(lock, [&] { return state_ == SessionState::Closed; });
    }
    if (state_ == SessionState::Closed) {
      if (!result_) throw Error(ErrorCode::InvalidState, "session closed without a file: " + finalize_error_);
      return *result_;
    }
    state_ = SessionState::Finalizing;
  }
  state_cv_.notify_all();

  try {
    stop_workers();
    store_tick();
    {
      std::lock_guard storage_lock(storage_mutex_);
      if (store_ && pend_t_.size() > pend_pos_) cut_segment(pend_t_.size() - pend_pos_);
    }

    SessionHeader h;
    {
      std::lock_guard lock(state_mutex_);
      h.session_id = session_id_;
      h.device_count = devices_;
      h.channel_count = channels_;
      h.packets_received = seq_.packets();
      h.seq_gaps = seq_.missing_packets();
      h.stale_packets = seq_.stale_packets();
      h.holes = seq_.holes();
      h.protocol_error = protocol_error_;
    }
    h.rate_hz = config_.rate_hz;
    h.gain = config_.gain;
    h.vref = config_.vref;
    h.packet_samples = config_.packet_samples;
    h.samples_per_segment = per_segment_;
    h.samples_unsaved = samples_unsaved_;
    h.events = stimuli_.events();
    {
      std::lock_guard lock(alarm_mutex_);
      h.alarms = alarms_;
    }
    h.save_delay = summarize(save_delay_);
    {
      std::lock_guard lock(visual_mutex_);
      h.plot_delay = summarize(plot_delay_);
    }

    // pass 1: timestamps and integrity of every segment
    std::vector<UtcMicros> timestamps;
    std::vector<std::size_t> valid;
    std::vector<UtcMicros> t;
    std::vector<std::uint32_t> st;
    std::vector<double> v;
    std::uint64_t missing_samples = 0;
    if (store_) {
      timestamps.reserve(store_->samples());
      for (std::size_t i = 0; i < store_->segments().size(); ++i) {
        try {
          store_->read(i, t, st, v);
          timestamps.insert(timestamps.end(), t.begin(), t.end());
          valid.push_back(i);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::SegmentMissing) throw;
          const auto& info = store_->segments()[i];
          h.missing_segments.push_back({info.index, info.samples, timestamps.size(), info.t_first, info.t_last});
          missing_samples += info.samples;
        }
      }
    }
    h.sample_count = timestamps.size();
    h.annotations = align(h.events, timestamps, config_.presentation_delay_us);
    std::uint64_t next_expected = 0, samples_received = 0;
    {
      std::lock_guard lock(state_mutex_);
      next_expected = seq_.next_expected();
      samples_received = seq_.samples();
    }
    const bool seq_consistent = h.packets_received + h.seq_gaps == next_expected &&
                                samples_received == h.packets_received * config_.packet_samples;
    h.sample_count_verified =
        seq_consistent && h.sample_count + missing_samples + h.samples_unsaved == samples_received;

    std::size_t cursor = 0;
    RowSource rows = [&](std::vector<std::uint32_t>& status, std::vector<double>& volts) -> std::size_t {
      std::size_t n = 0;
      while (cursor < valid.size() && n < (1u << 15)) {
        store_->read(valid[cursor++], t, st, v);
        status.insert(status.end(), st.begin(), st.end());
        volts.insert(volts.end(), v.begin(), v.end());
        n += t.size();
      }
      return n;
    };

    std::filesystem::path path = config_.session_file;
    if (path.empty()) path = config_.storage_dir / ((session_id_.empty() ? std::string("session") : session_id_) + ".beats");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_session_file(path.string(), h, timestamps, rows);

    if (store_ && !config_.keep_spill) {
      const auto dir = store_->directory();
      {
        std::lock_guard storage_lock(storage_mutex_);
        store_.reset();
      }
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
    }

    {
      std::lock_guard lock(state_mutex_);
      result_ = FinalizeResult{path.string(), std::move(h)};
      state_ = SessionState::Closed;
    }
    state_cv_.notify_all();
    return *result_;
  } catch (const std::exception& e) {
    {
      std::lock_guard lock(state_mutex_);
      finalize_error_ = e.what();
      state_ = SessionState::Closed;
    }
    state_cv_.notify_all();
    throw;
  }
}

SessionStatus Session::status() const {
  SessionStatus s;
  {
    std::lock_guard lock(state_mutex_);
    s.state = state_;
    s.session_id = session_id_;
    s.device_count = devices_;
    s.channel_count = channels_;
    s.packets = seq_.packets();
    s.seq_gaps = seq_.missing_packets();
    s.stale_packets = seq_.stale_packets();
    s.samples_received = seq_.samples();
    s.protocol_error = protocol_error_;
    if (result_) s.session_file = result_->path;
  }
  s.events = stimuli_.events().size();
  s.save_enabled = save_enabled_;
  s.storage_full = storage_full_;
  s.foreign_packets = foreign_;
  s.bytes_received = bytes_received_;
  s.samples_unsaved = samples_unsaved_;
  {
    std::lock_guard lock(alarm_mutex_);
    s.alarms = alarms_;
  }
  {
    std::lock_guard lock(storage_mutex_);
    if (store_) {
      s.samples_stored = store_->samples();
      s.segments = store_->segments().size();
    }
    s.save_delay = save_delay_;
  }
  s.storage_queue = storage_q_.stats();
  s.visual_queue = visual_q_.stats();
  {
    std::lock_guard lock(visual_mutex_);
    s.plot_delay = plot_delay_;
    for (const auto& sub : subscribers_) s.subscribers.emplace_back(sub->id(), sub->stats());
  }
  {
    std::lock_guard lock(analyzer_mutex_);
    for (const auto& a : analyzers_)
      s.analyzers.push_back({a->analyzer->name(), a->queue->stats(), a->consumed.load(), a->analyzer->summary_json()});
  }
  s.delays_measured = measuring();
  return s;
}

}  // namespace beats::recorder
