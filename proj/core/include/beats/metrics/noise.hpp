#pragma once

#include <optional>
#include <span>

namespace beats::metrics {

struct NoiseStats {
  double v_rms_uv = 0;  // after mean removal
  double v_pp_uv = 0;
  // Unset when the input is constant (zero RMS): a flag rather than infinity.
  std::optional<double> enob;
  std::optional<double> dynamic_range_db;
  double rate_hz = 0;
  double gain = 0;
  double vref = 0;

  [[nodiscard]] bool degenerate() const noexcept { return !enob.has_value(); }
};

/// log2(vref / (sqrt(2) * gain * v_rms)), v_rms in volts.
double enob_from_rms(double v_rms, double gain, double vref);
/// 20 log10(vref / (sqrt(2) * gain * v_rms)).
double dynamic_range_from_rms(double v_rms, double gain, double vref);

/// Input-short noise statistics. Needs at least 1000 samples (SignalTooShort).
NoiseStats noise_stats(std::span<const double> volts, double gain, double vref, double rate_hz = 0);

}  // namespace beats::metrics
