#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "beats/common/bounded_queue.hpp"
#include "beats/common/delay_stats.hpp"
#include "beats/common/socket.hpp"
#include "beats/recorder/analyzer.hpp"
#include "beats/recorder/segment_store.hpp"
#include "beats/recorder/sequence.hpp"
#include "beats/recorder/session_file.hpp"
#include "beats/recorder/stimulus.hpp"
#include "beats/recorder/waveform.hpp"
#include "beats/wire/packet.hpp"

namespace beats::recorder {

enum class SessionState { Idle, Receiving, Finalizing, Closed };
std::string_view to_string(SessionState state) noexcept;

enum class DelayMeasurement { Auto, On, Off };

struct RecorderConfig {
  Endpoint listen{"127.0.0.1", 5600};
  std::filesystem::path storage_dir = "beats-data";
  std::string session_file;  // default: <storage_dir>/<session_id>.beats

  // config snapshot of the stream this session expects
  double rate_hz = 4000;
  int gain = 24;
  double vref = 4.5;
  std::size_t packet_samples = 160;

  bool save_enabled = true;
  std::uint64_t storage_quota_bytes = 0;  // 0: unlimited
  bool keep_spill = false;

  std::size_t storage_queue_packets = 1024;
  std::size_t visual_queue_packets = 256;
  std::size_t analysis_queue_packets = 256;
  std::chrono::microseconds visual_period{1000};
  std::chrono::microseconds storage_period{5000};

  std::int64_t presentation_delay_us = 0;
  // Auto: measure Save/Plot delays only when sample timestamps track the wall clock.
  DelayMeasurement delays = DelayMeasurement::Auto;
};

struct FinalizeResult {
  std::string path;
  SessionHeader header;
};

struct AnalyzerStatus {
  std::string name;
  QueueStats queue;
  std::uint64_t consumed_packets = 0;
  std::string summary_json;
};

struct SessionStatus {
  SessionState state = SessionState::Idle;
  std::string session_id;
  std::size_t device_count = 0;
  std::size_t channel_count = 0;
  bool save_enabled = false;
  bool storage_full = false;
  std::uint64_t packets = 0;
  std::uint64_t seq_gaps = 0;
  std::uint64_t stale_packets = 0;
  std::uint64_t foreign_packets = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t samples_received = 0;
  std::uint64_t samples_stored = 0;
  std::uint64_t samples_unsaved = 0;
  std::uint64_t segments = 0;
  std::size_t events = 0;
  std::vector<std::string> alarms;
  std::string protocol_error;
  QueueStats storage_queue;
  QueueStats visual_queue;
  std::vector<AnalyzerStatus> analyzers;
  std::vector<std::pair<std::uint64_t, QueueStats>> subscribers;
  bool delays_measured = false;
  DelayTracker save_delay;
  DelayTracker plot_delay;
  std::string session_file;

  [[nodiscard]] std::string to_json() const;
};

/// Recorder-side owner of one session's state.
///
/// A single receive context calls on_packet(); storage, visualization and
/// each analyzer run in their own contexts behind their own bounded queue.
/// All state transitions go through this object.
class Session {
 public:
  explicit Session(RecorderConfig config);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // receive context
  /// idle -> receiving; called when the engine connection is accepted.
  void begin();
  void on_packet(std::shared_ptr<const wire::DataPacket> packet);
  void on_protocol_error(const std::string& message);
  void add_bytes(std::uint64_t n) noexcept { bytes_received_ += n; }

  // control verbs (any context)
  void set_save_enabled(bool enabled);
  /// Timestamped now. Throws InvalidState unless receiving.
  StimulusEvent record_stimulus(std::string label, std::optional<int> intensity = std::nullopt);
  std::optional<StimulusEvent> undo_last();
  [[nodiscard]] std::vector<StimulusEvent> events() const { return stimuli_.events(); }
  void register_analyzer(std::shared_ptr<Analyzer> analyzer, std::size_t queue_packets = 0);
  std::shared_ptr<WaveformSubscription> subscribe(WaveformOptions options);
  void unsubscribe(std::uint64_t id);

  /// Drains the storage queue into complete segments. Runs periodically in
  /// the storage context; safe to call directly.
  std::vector<SegmentInfo> store_tick();

  /// receiving|idle -> finalizing -> closed. Concurrent callers wait for the
  /// first one and get the same result.
  FinalizeResult finalize();

  [[nodiscard]] SessionState state() const;
  /// Blocks until closed or the timeout expires.
  bool wait_closed(std::chrono::milliseconds timeout) const;
  [[nodiscard]] SessionStatus status() const;
  [[nodiscard]] const RecorderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t samples_per_segment() const noexcept { return per_segment_; }
  /// Test access to the spill store (null until the first packet).
  SegmentStore* store() noexcept { return store_.get(); }

 private:
  struct AnalyzerSlot {
    std::shared_ptr<Analyzer> analyzer;
    std::unique_ptr<BoundedQueue<std::shared_ptr<const wire::DataPacket>>> queue;
    std::atomic<std::uint64_t> consumed{0};
    std::thread thread;
  };

  void init_stream_locked(const wire::DataPacket& first);
  void storage_loop();
  void visual_loop();
  void cut_segment(std::size_t n);
  void stop_workers();
  void alarm(const std::string& text);
  bool measuring() const noexcept { return measure_delays_.load(); }

  RecorderConfig config_;
  std::size_t per_segment_;

  mutable std::mutex state_mutex_;
  mutable std::condition_variable state_cv_;
  SessionState state_ = SessionState::Idle;
  std::string session_id_;
  std::size_t devices_ = 0, channels_ = 0;
  bool stream_known_ = false;
  std::optional<FinalizeResult> result_;
  std::string finalize_error_;
  std::string protocol_error_;

  mutable std::mutex alarm_mutex_;
  std::vector<std::string> alarms_;
  std::uint64_t storage_alarms_seen_ = 0;

  StimulusLog stimuli_;

  // receive context
  SequenceTracker seq_;
  std::atomic<std::uint64_t> foreign_{0};
  std::atomic<std::uint64_t> bytes_received_{0};
  std::atomic<bool> measure_delays_{false};

  BoundedQueue<std::shared_ptr<const wire::DataPacket>> storage_q_;
  BoundedQueue<std::shared_ptr<const wire::DataPacket>> visual_q_;

  // storage context
  mutable std::mutex storage_mutex_;
  std::unique_ptr<SegmentStore> store_;
  std::atomic<bool> save_enabled_;
  std::atomic<bool> storage_full_{false};
  std::vector<UtcMicros> pend_t_;
  std::vector<std::uint32_t> pend_status_;
  std::vector<double> pend_volts_;
  std::size_t pend_pos_ = 0;
  std::atomic<std::uint64_t> samples_unsaved_{0};
  DelayTracker save_delay_;
  std::vector<std::shared_ptr<const wire::DataPacket>> drained_;

  // visualization context
  mutable std::mutex visual_mutex_;
  std::vector<std::shared_ptr<WaveformSubscription>> subscribers_;
  std::uint64_t next_subscriber_ = 0;
  DelayTracker plot_delay_;

  mutable std::mutex analyzer_mutex_;
  std::vector<std::unique_ptr<AnalyzerSlot>> analyzers_;

  std::atomic<bool> workers_stop_{false};
  std::thread storage_thread_;
  std::thread visual_thread_;
  bool workers_joined_ = false;
};

}  // namespace beats::recorder
