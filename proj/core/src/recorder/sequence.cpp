#include "beats/recorder/sequence.hpp"

namespace beats::recorder {

SequenceTracker::Verdict SequenceTracker::observe(std::uint64_t seq, UtcMicros first_t, UtcMicros last_t,
                                                  std::size_t samples) {
  if (seq < next_) {
    ++stale_;
    return Verdict::Stale;
  }
  Verdict v = Verdict::InOrder;
  if (seq > next_) {
    const std::uint64_t missing = seq - next_;
    holes_.push_back({next_, missing, missing * packet_samples_, samples_, last_t_, first_t});
    missing_ += missing;
    v = Verdict::AfterGap;
  }
  next_ = seq + 1;
  ++packets_;
  samples_ += samples;
  last_t_ = last_t;
  return v;
}

}  // namespace beats::recorder
