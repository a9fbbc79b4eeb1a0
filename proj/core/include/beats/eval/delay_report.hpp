#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "beats/acq/engine.hpp"
#include "beats/recorder/session_file.hpp"

namespace beats::eval {

struct DelayDimension {
  bool measured = false;
  double max_s = 0;
  double mean_s = 0;
  std::vector<double> hourly_max_s;

  /// max over the last complete hour / max over the first hour; 0 when
  /// fewer than two complete hours were observed.
  [[nodiscard]] double growth_ratio(double duration_h) const;
};

/// Four delay dimensions (ADC, Trans on the engine; Save, Plot on the
/// recorder) and the two loss counters.
struct DelayLossReport {
  double duration_h = 0;
  DelayDimension adc, trans, save, plot;
  std::uint64_t mp_loss_packets = 0;  // ping-pong drops, in packets
  std::uint64_t sw_loss_packets = 0;  // sequence gaps seen by the recorder
  std::uint64_t overruns = 0;         // late DRDY services (no data lost)
  std::uint64_t frames = 0;
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_received = 0;
  std::uint64_t in_flight = 0;
  std::size_t packet_samples = 0;

  /// Largest delay over the measured dimensions.
  [[nodiscard]] double max_delay_s() const;
  [[nodiscard]] double avg_max_delay_per_hour() const;
  /// frames == packets_sent * packet_samples + in_flight + dropped frames
  [[nodiscard]] bool frames_accounted() const;
  /// Every measured dimension: last-hour max <= limit x first-hour max.
  [[nodiscard]] bool delay_bounded(double limit = 2.0) const;

  [[nodiscard]] std::string to_json() const;
  /// Table row in the layout time | ADC Trans Save Plot | MP SW.
  [[nodiscard]] std::string table_text() const;

  std::uint64_t dropped_frames = 0;
};

DelayLossReport delay_loss_report(const acq::SessionReport& engine, const recorder::SessionHeader& session);

}  // namespace beats::eval
