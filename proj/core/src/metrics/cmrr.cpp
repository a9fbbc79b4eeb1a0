#include "beats/metrics/cmrr.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "beats/common/error.hpp"

namespace beats::metrics {

double cmrr_db(double a_d, double a_cm) {
  if (!(a_cm > 0.0)) throw Error(ErrorCode::ZeroCommonModeResponse, "common-mode gain is zero");
  if (!(a_d > 0.0)) throw Error(ErrorCode::InvalidArgument, "differential gain must be positive");
  return 20.0 * std::log10(a_d / a_cm);
}

double tone_amplitude(std::span<const double> x, double rate_hz, double frequency_hz) {
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorCode::SignalTooShort, "tone amplitude needs at least two samples");
  double mean = 0.0;
  for (const double v : x) mean += v;
  mean /= static_cast<double>(n);
  if (frequency_hz == 0.0) return std::abs(mean);

  const double w_step = 2.0 * std::numbers::pi / static_cast<double>(n - 1);
  const double phase_step = 2.0 * std::numbers::pi * frequency_hz / rate_hz;
  // recursive phasor rotation; renormalised periodically to bound drift
  std::complex<double> rot(std::cos(phase_step), -std::sin(phase_step));
  std::complex<double> ph(1.0, 0.0);
  std::complex<double> acc(0.0, 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(w_step * static_cast<double>(i));
    acc += w * (x[i] - mean) * ph;
    wsum += w;
    ph *= rot;
    if ((i & 1023) == 1023) {
      const double k = phase_step * static_cast<double>(i + 1);
      ph = std::complex<double>(std::cos(k), -std::sin(k));
    }
  }
  return 2.0 * std::abs(acc) / wsum;
}

double CmrrCurve::min_db() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& p : points) m = std::min(m, p.cmrr_db);
  return m;
}

std::string format_floor(const CmrrPoint& p) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(1);
  if (p.below_floor) o << "> measurement floor " << p.cmrr_db << " dB";
  else o << p.cmrr_db << " dB";
  return o.str();
}

}  // namespace beats::metrics
