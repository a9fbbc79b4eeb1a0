#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beats/common/time.hpp"

namespace beats::recorder {

struct StimulusEvent {
  std::uint64_t id = 0;
  std::string label;
  UtcMicros t_utc_us = 0;
  std::optional<int> intensity;  // 0..10
  bool revoked = false;

  friend bool operator==(const StimulusEvent&, const StimulusEvent&) = default;
};

/// Operator marker log. Thread-safe; the only writer of event state.
class StimulusLog {
 public:
  /// Throws InvalidArgument for an empty label or intensity outside 0..10.
  StimulusEvent record(std::string label, std::optional<int> intensity, UtcMicros t_utc_us);
  /// Revokes the most recent non-revoked event.
  std::optional<StimulusEvent> undo_last();

  /// Events ordered by timestamp (ties keep insertion order).
  [[nodiscard]] std::vector<StimulusEvent> events() const;
  [[nodiscard]] std::size_t active_count() const;

 private:
  mutable std::mutex mutex_;
  std::vector<StimulusEvent> events_;
  std::uint64_t next_id_ = 0;
};

struct AlignedAnnotation {
  std::uint64_t event_id = 0;
  bool aligned = false;            // false: event lies outside the recorded span
  std::uint64_t sample_index = 0;  // first sample with t >= event time
  std::int64_t offset_us = 0;      // that sample's time minus the event time
};

/// Binary-searches every non-revoked event into sorted sample timestamps.
/// `presentation_delay_us` shifts events forward before the search (the
/// stimulus reaches the subject after the button press).
std::vector<AlignedAnnotation> align(std::span<const StimulusEvent> events,
                                     std::span<const UtcMicros> timestamps,
                                     std::int64_t presentation_delay_us = 0);

}  // namespace beats::recorder
