#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace beats::emu {

enum class SourceKind { Dc, Sine, Square, AlphaBurst, WhiteNoise, Composite };

/// Analog waveform bound to an emulated input pin. Stands in for an electrode.
///
/// Evaluation is a pure function of (time, frame index): the same source,
/// seed and query always give the same voltage, so frame streams are
/// reproducible.
struct SignalSource {
  SourceKind kind = SourceKind::Dc;
  double amplitude = 0.0;   // V, peak (Dc: the level)
  double frequency = 0.0;   // Hz
  double phase = 0.0;       // rad
  double rms = 0.0;         // V, WhiteNoise only
  std::uint64_t seed = 0;   // WhiteNoise only
  double burst_period_s = 4.0;  // AlphaBurst: on/off cycle length
  double burst_duty = 0.5;      // AlphaBurst: fraction of the cycle that is "on"
  std::vector<SignalSource> parts;  // Composite only

  static SignalSource dc(double level);
  static SignalSource sine(double frequency_hz, double amplitude_v, double phase_rad = 0.0);
  static SignalSource square(double frequency_hz, double amplitude_v);
  static SignalSource alpha_burst(double frequency_hz, double amplitude_v,
                                  double period_s = 4.0, double duty = 0.5);
  static SignalSource white_noise(double rms_v, std::uint64_t seed);
  static SignalSource composite(std::vector<SignalSource> parts);

  [[nodiscard]] double value(double t_s, std::uint64_t frame_index) const noexcept;
  [[nodiscard]] bool is_zero() const noexcept;
  /// Largest |value| the source can produce (noise: 6 sigma).
  [[nodiscard]] double peak_bound() const noexcept;
};

/// Parses "kind:arg:arg" terms joined by '+', e.g. "sine:10:50e-6+dc:1e-3".
/// Kinds: dc:L, sine:F:A[:PHASE], square:F:A, alpha:F:A[:PERIOD[:DUTY]], noise:RMS[:SEED].
SignalSource parse_signal_source(std::string_view text);
std::string describe(const SignalSource& source);

}  // namespace beats::emu
