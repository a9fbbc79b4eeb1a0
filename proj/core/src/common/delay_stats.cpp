#include "beats/common/delay_stats.hpp"

#include <algorithm>

namespace beats {

void DelayTracker::reset(UtcMicros origin) { *this = DelayTracker(origin); }

void DelayTracker::record(UtcMicros at, double delay_s) {
  delay_s = std::max(0.0, delay_s);
  max_ = std::max(max_, delay_s);
  sum_ += delay_s;
  ++count_;
  const auto hour = static_cast<std::size_t>(std::max<UtcMicros>(0, at - origin_) / 3'600'000'000LL);
  if (hourly_.size() <= hour) hourly_.resize(hour + 1, 0.0);
  hourly_[hour] = std::max(hourly_[hour], delay_s);
}

}  // namespace beats
