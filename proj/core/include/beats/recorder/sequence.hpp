#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beats/common/time.hpp"

namespace beats::recorder {

/// Samples per storage segment: 5 ms of stream time, at least one sample.
constexpr std::size_t samples_per_segment(double rate_hz) {
  const auto n = static_cast<std::size_t>(rate_hz * 5.0 / 1000.0);
  return n ? n : 1;
}

/// Packets that never arrived, located in the received sample stream.
struct Hole {
  std::uint64_t first_missing_seq = 0;
  std::uint64_t missing_packets = 0;
  std::uint64_t missing_samples = 0;
  std::uint64_t sample_index = 0;  // index of the first received sample after the hole
  UtcMicros t_before_us = 0;       // last sample before the hole (0 if none)
  UtcMicros t_after_us = 0;        // first sample after the hole
};

/// Sequence-number bookkeeping for one stream.
class SequenceTracker {
 public:
  enum class Verdict { InOrder, AfterGap, Stale };

  explicit SequenceTracker(std::size_t packet_samples = 160) : packet_samples_(packet_samples) {}

  /// Stale packets (seq already seen or behind) are not counted as received.
  Verdict observe(std::uint64_t seq, UtcMicros first_t, UtcMicros last_t, std::size_t samples);

  [[nodiscard]] std::uint64_t packets() const noexcept { return packets_; }
  [[nodiscard]] std::uint64_t missing_packets() const noexcept { return missing_; }
  [[nodiscard]] std::uint64_t stale_packets() const noexcept { return stale_; }
  [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }
  [[nodiscard]] std::uint64_t next_expected() const noexcept { return next_; }
  [[nodiscard]] const std::vector<Hole>& holes() const noexcept { return holes_; }

 private:
  std::size_t packet_samples_;
  std::uint64_t next_ = 0;
  std::uint64_t packets_ = 0;
  std::uint64_t missing_ = 0;
  std::uint64_t stale_ = 0;
  std::uint64_t samples_ = 0;
  UtcMicros last_t_ = 0;
  std::vector<Hole> holes_;
};

}  // namespace beats::recorder
