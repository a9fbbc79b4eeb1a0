#include "beats/metrics/filters.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "beats/common/error.hpp"

namespace beats::metrics {

NotchFilter::NotchFilter(double rate_hz, double notch_hz, double stopband_hz) : rate_(rate_hz) {
  if (!(rate_hz > 0.0) || !(notch_hz > 0.0) || notch_hz >= rate_hz / 2.0 || !(stopband_hz > 0.0))
    throw Error(ErrorCode::InvalidArgument, "notch frequency must lie in (0, rate/2)");
  const double w0 = 2.0 * std::numbers::pi * notch_hz / rate_hz;
  const double q = notch_hz / stopband_hz;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  b0_ = 1.0 / a0;
  b1_ = -2.0 * std::cos(w0) / a0;
  b2_ = 1.0 / a0;
  a1_ = b1_;
  a2_ = (1.0 - alpha) / a0;
}

double NotchFilter::process(double x) noexcept {
  const double y = b0_ * x + s1_;
  s1_ = b1_ * x - a1_ * y + s2_;
  s2_ = b2_ * x - a2_ * y;
  return y;
}

void NotchFilter::reset(double x0) noexcept {
  // DC gain is one, so y = x0 in steady state
  s2_ = (b2_ - a2_) * x0;
  s1_ = (b1_ - a1_) * x0 + s2_;
}

double NotchFilter::gain_at(double f) const noexcept {
  const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / rate_);
  const auto num = b0_ + b1_ * z + b2_ * z * z;
  const auto den = 1.0 + a1_ * z + a2_ * z * z;
  return std::abs(num / den);
}

std::vector<double> display_filter(std::span<const double> x, double rate_hz, double mains_hz) {
  std::vector<double> y(x.begin(), x.end());
  if (y.empty()) return y;
  NotchFilter f(rate_hz, mains_hz);
  f.reset(y.front());
  for (double& v : y) v = f.process(v);
  f.reset(y.back());
  for (auto it = y.rbegin(); it != y.rend(); ++it) *it = f.process(*it);
  return y;
}

std::vector<double> detrend(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> y(x.begin(), x.end());
  if (n < 2) {
    for (double& v : y) v = 0.0;
    return y;
  }
  // centred abscissa keeps the normal equations well conditioned
  const double tc = 0.5 * static_cast<double>(n - 1);
  double sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - tc;
    sx += t;
    sxx += t * t;
    sy += x[i];
    sxy += t * x[i];
  }
  const double slope = sxy / sxx;
  const double intercept = (sy - slope * sx) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] - (intercept + slope * (static_cast<double>(i) - tc));
  return y;
}

}  // namespace beats::metrics
