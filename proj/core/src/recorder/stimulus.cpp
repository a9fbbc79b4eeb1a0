#include "beats/recorder/stimulus.hpp"

#include <algorithm>

#include "beats/common/error.hpp"

namespace beats::recorder {

StimulusEvent StimulusLog::record(std::string label, std::optional<int> intensity, UtcMicros t_utc_us) {
  if (label.empty()) throw Error(ErrorCode::InvalidArgument, "stimulus class must not be empty");
  if (intensity && (*intensity < 0 || *intensity > 10))
    throw Error(ErrorCode::InvalidArgument, "stimulus intensity must be within 0..10");
  std::lock_guard lock(mutex_);
  StimulusEvent e{next_id_++, std::move(label), t_utc_us, intensity, false};
  events_.push_back(e);
  return e;
}

std::optional<StimulusEvent> StimulusLog::undo_last() {
  std::lock_guard lock(mutex_);
  // "latest" is by timestamp, matching the order of the final log
  auto best = events_.end();
  for (auto it = events_.begin(); it != events_.end(); ++it) {
    if (!it->revoked && (best == events_.end() || it->t_utc_us >= best->t_utc_us)) best = it;
  }
  if (best == events_.end()) return std::nullopt;
  best->revoked = true;
  return *best;
}

std::vector<StimulusEvent> StimulusLog::events() const {
  std::lock_guard lock(mutex_);
  auto out = events_;
  std::stable_sort(out.begin(), out.end(),
                   [](const StimulusEvent& a, const StimulusEvent& b) { return a.t_utc_us < b.t_utc_us; });
  return out;
}

std::size_t StimulusLog::active_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [](const StimulusEvent& e) { return !e.revoked; }));
}

std::vector<AlignedAnnotation> align(std::span<const StimulusEvent> events, std::span<const UtcMicros> timestamps,
                                     std::int64_t presentation_delay_us) {
  std::vector<AlignedAnnotation> out;
  for (const auto& e : events) {
    if (e.revoked) continue;
    AlignedAnnotation a;
    a.event_id = e.id;
    const UtcMicros t = e.t_utc_us + presentation_delay_us;
    if (!timestamps.empty() && t >= timestamps.front() && t <= timestamps.back()) {
      const auto it = std::lower_bound(timestamps.begin(), timestamps.end(), t);
      a.aligned = true;
      a.sample_index = static_cast<std::uint64_t>(it - timestamps.begin());
      a.offset_us = *it - t;
    }
    out.push_back(a);
  }
  return out;
}

}  // namespace beats::recorder
