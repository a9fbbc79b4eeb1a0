#pragma once

#include <span>
#include <vector>

namespace beats::metrics {

/// Mains notch with a 2 Hz -3 dB stopband (Q = f0 / 2 Hz), biquad, causal.
class NotchFilter {
 public:
  NotchFilter(double rate_hz, double notch_hz = 50.0, double stopband_hz = 2.0);

  double process(double x) noexcept;
  /// Puts the filter in steady state for a constant input x0.
  void reset(double x0 = 0.0) noexcept;
  /// Magnitude response at frequency f.
  [[nodiscard]] double gain_at(double frequency_hz) const noexcept;

 private:
  double rate_;
  double b0_, b1_, b2_, a1_, a2_;
  double s1_ = 0, s2_ = 0;
};

/// Display filter: the mains notch run forward then backward (zero phase).
std::vector<double> display_filter(std::span<const double> signal, double rate_hz, double mains_hz = 50.0);

/// Removes the least-squares line.
std::vector<double> detrend(std::span<const double> signal);

}  // namespace beats::metrics
