#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace beats::metrics {

/// 20 log10(a_d / a_cm). Throws ZeroCommonModeResponse when a_cm <= 0.
double cmrr_db(double a_d, double a_cm);

/// Peak amplitude of the component at `frequency_hz`: mean removed, Hann
/// window, single-bin DFT normalised by the window sum. frequency 0 gives |mean|.
double tone_amplitude(std::span<const double> signal, double rate_hz, double frequency_hz);

struct CmrrPoint {
  double frequency_hz = 0;
  double cmrr_db = 0;
  bool below_floor = false;  // common-mode response not measurable: cmrr_db is a lower bound
};

struct CmrrCurve {
  std::size_t channel = 0;
  std::vector<CmrrPoint> points;
  [[nodiscard]] double min_db() const;
};

/// Common-mode response at or below this fraction of the common-mode input
/// amplitude counts as "not measurable".
inline constexpr double kCmrrFloorRatio = 1e-9;  // 180 dB

std::string format_floor(const CmrrPoint& point);

}  // namespace beats::metrics
