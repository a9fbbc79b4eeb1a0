#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "beats/acq/config.hpp"
#include "beats/acq/ping_pong.hpp"
#include "beats/acq/sample_fifo.hpp"
#include "beats/acq/sample_record.hpp"
#include "beats/acq/spi_host.hpp"
#include "beats/acq/transport.hpp"
#include "beats/common/delay_stats.hpp"
#include "beats/emu/emulated_adc.hpp"

namespace beats::acq {

struct SessionReport {
  std::string session_id;
  std::size_t device_count = 0;
  std::size_t channel_count = 0;
  double rate_hz = 0;
  std::string clock;
  int configure_attempts = 0;
  std::vector<std::string> warnings;

  std::uint64_t frames_fetched = 0;
  std::uint64_t samples_formatted = 0;
  std::uint64_t packets_sent = 0;
  std::uint64_t samples_sent = 0;
  std::uint64_t in_flight = 0;  // fetched but not (yet) part of a sent packet
  std::uint64_t overruns = 0;
  std::uint64_t pingpong_drops = 0;
  std::uint64_t mp_loss_packets = 0;  // drops expressed in packets, rounded up
  FifoStats fifo;
  PingPongStats pingpong;

  bool delays_measured = false;  // only with the realtime clock
  DelayTracker adc_delay;        // DRDY service -> FIFO
  DelayTracker trans_delay;      // first sample in packet -> socket write done

  UtcMicros first_sample_us = 0;
  UtcMicros last_sample_us = 0;
  double elapsed_s = 0;  // wall time of the conversion loop
  std::string stop_reason;
  std::string error;

  /// frames_fetched == packets_sent * packet_samples + in_flight + pingpong_drops
  [[nodiscard]] bool lossless_accounting(std::size_t packet_samples) const noexcept;
  [[nodiscard]] std::string to_json() const;
};

struct RunLimits {
  std::uint64_t max_frames = 0;       // 0: unbounded
  double max_seconds = 0;             // wall clock, 0: unbounded
  const std::atomic<bool>* stop_flag = nullptr;  // e.g. set from a signal handler
};

/// Firmware-equivalent acquisition pipeline over any AdcInterface.
///
/// Contexts: the DRDY handler (device context) fetches raw frames into the
/// ping-pong buffer; the formatter translates halves into FIFO records; the
/// packager pops records, builds packets and hands them to the sink. The
/// FIFO is the only channel between formatter and packager.
class AcquisitionEngine {
 public:
  AcquisitionEngine(AcqConfig config, emu::AdcInterface& adc, PacketSink& sink);
  ~AcquisitionEngine();
  AcquisitionEngine(const AcquisitionEngine&) = delete;
  AcquisitionEngine& operator=(const AcquisitionEngine&) = delete;

  /// Blocks until a limit is hit, stop() is called, or a fatal error. Always
  /// issues STOP on teardown. Throws (after teardown) on configure or
  /// transport failure; last_report() still describes the partial run.
  SessionReport run(const RunLimits& limits = {});
  void stop();

  /// Virtual pacing gate for EmulatedAdc: admits the next conversion once
  /// the ping-pong buffer can take it; false once the run is over.
  bool admit_conversion();

  [[nodiscard]] const SessionReport& last_report() const noexcept { return report_; }
  [[nodiscard]] const AcqConfig& config() const noexcept { return config_; }

 private:
  void on_drdy(const emu::DrdyEdge& edge);
  void format_loop();
  void package_loop();
  void signal_main();

  AcqConfig config_;
  emu::AdcInterface& adc_;
  PacketSink& sink_;
  SpiHost spi_;
  RecordLayout layout_;
  std::unique_ptr<PingPongBuffer> pingpong_;
  std::unique_ptr<SampleFifo> fifo_;
  std::mutex spi_mutex_;

  // DRDY handler state
  std::vector<std::uint8_t> raw_;
  std::atomic<bool> in_handler_{false};
  std::atomic<bool> accepting_{false};
  std::atomic<std::uint64_t> frames_fetched_{0};
  std::atomic<std::uint64_t> admitted_{0};
  std::atomic<std::uint64_t> overruns_{0};
  UtcMicros last_t_ = 0;
  UtcMicros first_t_ = 0;
  std::uint64_t max_frames_ = 0;

  // formatter / packager
  std::atomic<std::uint64_t> formatted_{0};
  std::atomic<std::uint64_t> packets_sent_{0};
  std::uint64_t in_flight_ = 0;
  UtcMicros last_sent_t_ = 0;
  DelayTracker adc_delay_;
  DelayTracker trans_delay_;
  std::string transport_error_;

  std::atomic<bool> stop_requested_{false};
  std::mutex main_mutex_;
  std::condition_variable main_cv_;

  SessionReport report_;
};

/// Builds an EmulatedAdc for `config` (pacing from config.acq.clock), binds
/// the emulator inputs and runs an engine against `sink`. `setup` runs
/// before START, e.g. to add markers or frame observers.
SessionReport run_emulated(const RunConfig& config, PacketSink& sink, const RunLimits& limits = {},
                           const std::function<void(emu::EmulatedAdc&)>& setup = {});

}  // namespace beats::acq
