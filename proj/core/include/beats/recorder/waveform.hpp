#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "beats/common/bounded_queue.hpp"
#include "beats/common/time.hpp"
#include "beats/metrics/filters.hpp"
#include "beats/wire/packet.hpp"

namespace beats::recorder {

inline constexpr double kMaxPointsPerSecond = 2000.0;

struct WaveformOptions {
  std::vector<std::size_t> channels;  // empty: all channels
  double max_points_per_s = kMaxPointsPerSecond;  // clamped to 2000
  bool filter = false;                // mains notch before decimation
  double mains_hz = 50.0;
  bool detrend = false;               // least-squares line removed per batch
  double batch_ms = 20.0;             // stream time covered by one batch (rounded to whole points)
  std::size_t queue_batches = 64;     // drop-oldest beyond this
};

/// One message of the waveform stream (NDJSON line on the control API).
struct WaveformBatch {
  std::uint64_t seq = 0;
  std::vector<std::size_t> channels;
  std::vector<UtcMicros> t;
  std::vector<std::vector<double>> data;  // [channel][point], volts
  std::uint64_t dropped_before = 0;       // batches evicted from this subscriber so far
  bool filtered = false;
  bool detrended = false;

  [[nodiscard]] std::string to_json() const;
};

/// Per-subscriber decimation/processing state and its bounded batch queue.
class WaveformSubscription {
 public:
  WaveformSubscription(std::uint64_t id, WaveformOptions options, double rate_hz, std::size_t channel_count);

  std::optional<WaveformBatch> pop_for(std::chrono::microseconds timeout) { return queue_.pop_for(timeout); }
  void close() { queue_.close(); }

  [[nodiscard]] std::uint64_t id() const noexcept { return id_; }
  [[nodiscard]] const WaveformOptions& options() const noexcept { return options_; }
  [[nodiscard]] std::size_t decimation() const noexcept { return decimation_; }
  [[nodiscard]] QueueStats stats() const { return queue_.stats(); }
  [[nodiscard]] bool closed() const { return queue_.closed(); }

  /// Visualization context only.
  void feed(const wire::DataPacket& packet);

 private:
  void emit();

  std::uint64_t id_;
  WaveformOptions options_;
  std::size_t decimation_;
  std::size_t points_per_batch_ = 1;
  std::uint64_t sample_counter_ = 0;
  std::uint64_t batch_seq_ = 0;
  std::vector<metrics::NotchFilter> notches_;
  bool primed_ = false;
  WaveformBatch pending_;
  BoundedQueue<WaveformBatch> queue_;
};

}  // namespace beats::recorder
