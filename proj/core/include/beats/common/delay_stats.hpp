#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beats/common/time.hpp"

namespace beats {

/// Running maximum of one delay dimension, also bucketed per session hour.
class DelayTracker {
 public:
  DelayTracker() = default;
  explicit DelayTracker(UtcMicros origin) : origin_(origin) {}

  void reset(UtcMicros origin);
  /// `at` positions the observation in session time; negative delays clamp to 0.
  void record(UtcMicros at, double delay_s);

  [[nodiscard]] double max_s() const noexcept { return max_; }
  [[nodiscard]] double mean_s() const noexcept { return count_ ? sum_ / static_cast<double>(count_) : 0.0; }
  [[nodiscard]] std::uint64_t count() const noexcept { return count_; }
  /// Index h holds the max observed during [h, h+1) hours after the origin.
  [[nodiscard]] const std::vector<double>& hourly_max() const noexcept { return hourly_; }

 private:
  UtcMicros origin_ = 0;
  double max_ = 0.0;
  double sum_ = 0.0;
  std::uint64_t count_ = 0;
  std::vector<double> hourly_;
};

}  // namespace beats
