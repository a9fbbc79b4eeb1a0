#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace beats::metrics {

/// One-sided power spectral density, V^2/Hz; bin k sits at k * df.
struct Psd {
  double df = 0;
  std::vector<double> power;

  [[nodiscard]] double frequency(std::size_t k) const noexcept { return df * static_cast<double>(k); }
  [[nodiscard]] std::size_t peak_bin(std::size_t from = 1) const;
};

/// Hann-windowed periodogram of the whole signal.
Psd periodogram(std::span<const double> signal, double rate_hz);

/// Welch estimate: Hann segments of segment_s seconds, 50% overlap, averaged.
Psd welch_psd(std::span<const double> signal, double rate_hz, double segment_s = 2.0);

struct Band {
  std::string_view name;
  double lo_hz;
  double hi_hz;  // exclusive
};

inline constexpr std::array<Band, 5> kEegBands{{
    {"delta", 1.0, 4.0},
    {"theta", 4.0, 8.0},
    {"alpha", 8.0, 13.0},
    {"beta", 13.0, 30.0},
    {"gamma", 30.0, 50.0},
}};

/// Band powers in uV^2, each the PSD integrated over lo <= f < hi.
struct BandPower {
  double delta = 0, theta = 0, alpha = 0, beta = 0, gamma = 0;

  [[nodiscard]] double total() const noexcept { return delta + theta + alpha + beta + gamma; }
  [[nodiscard]] double get(std::size_t band) const noexcept;
  [[nodiscard]] double fraction(std::size_t band) const noexcept;
};

/// Integrated power of one band of a PSD, in V^2.
double integrate_band(const Psd& psd, double lo_hz, double hi_hz);

/// Welch PSD (2 s Hann segments, 50% overlap) accumulated per EEG band.
/// Needs at least 2 s of signal (SignalTooShort).
BandPower band_power(std::span<const double> signal, double rate_hz);

}  // namespace beats::metrics
