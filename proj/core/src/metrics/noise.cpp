#include "beats/metrics/noise.hpp"

#include <algorithm>
#include <cmath>

#include "beats/common/error.hpp"

namespace beats::metrics {

double enob_from_rms(double v_rms, double gain, double vref) {
  return std::log2(vref / (std::sqrt(2.0) * gain * v_rms));
}

double dynamic_range_from_rms(double v_rms, double gain, double vref) {
  return 20.0 * std::log10(vref / (std::sqrt(2.0) * gain * v_rms));
}

NoiseStats noise_stats(std::span<const double> volts, double gain, double vref, double rate_hz) {
  if (volts.size() < 1000)
    throw Error(ErrorCode::SignalTooShort, "noise statistics need at least 1000 samples");
  if (!(gain > 0.0) || !(vref > 0.0)) throw Error(ErrorCode::InvalidArgument, "gain and vref must be positive");

  double mean = 0.0;
  for (const double v : volts) mean += v;
  mean /= static_cast<double>(volts.size());
  double ss = 0.0;
  for (const double v : volts) ss += (v - mean) * (v - mean);
  const double rms = std::sqrt(ss / static_cast<double>(volts.size()));
  const auto [lo, hi] = std::minmax_element(volts.begin(), volts.end());

  NoiseStats s;
  s.v_rms_uv = rms * 1e6;
  s.v_pp_uv = (*hi - *lo) * 1e6;
  s.rate_hz = rate_hz;
  s.gain = gain;
  s.vref = vref;
  if (rms > 0.0) {
    s.enob = enob_from_rms(rms, gain, vref);
    s.dynamic_range_db = dynamic_range_from_rms(rms, gain, vref);
  }
  return s;
}

}  // namespace beats::metrics
