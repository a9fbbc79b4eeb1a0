#pragma once

#include <cstdint>
#include <functional>

#include "beats/acq/config.hpp"
#include "beats/acq/engine.hpp"
#include "beats/eval/delay_report.hpp"
#include "beats/recorder/session_file.hpp"

namespace beats::sim {

/// Service-time model of the pipeline contexts, in microseconds. Each cost
/// is base + exponential(mean); "stall" terms are rare preemptions drawn
/// uniformly from [0, max] with the given rate.
struct ServiceModel {
  // DRDY handler: interrupt latency before the fetch starts
  double handler_latency_us = 1.0;
  double handler_latency_mean_us = 2.0;
  double handler_stall_per_frame = 2e-6;
  double handler_stall_max_us = 100.0;

  // formatter: translate one ping-pong half into FIFO records
  double format_per_frame_us = 0.8;
  double format_mean_us = 10.0;
  double format_stall_per_half = 1e-3;
  double format_stall_max_us = 8'000.0;

  // packager: encode and write one packet
  double encode_per_sample_us = 5.0;
  double encode_mean_us = 200.0;
  double wire_bytes_per_us = 1000.0;
  double bytes_per_sample = 800.0;
  double packager_stall_per_packet = 1e-3;
  double packager_stall_max_us = 12'000.0;
  std::size_t socket_buffer_packets = 16;
  double network_latency_us = 20.0;

  // recorder receive: decode one packet
  double decode_per_sample_us = 5.0;
  double decode_mean_us = 200.0;

  // recorder storage: write one segment; periodic flush stalls
  double segment_write_us = 15.0;
  double flush_interval_s = 60.0;
  double flush_stall_min_us = 20'000.0;
  double flush_stall_max_us = 300'000.0;

  // recorder visualization timer
  double plot_period_us = 1'000.0;
  double plot_jitter_mean_us = 20.0;
  double plot_stall_per_packet = 1e-3;
  double plot_stall_max_us = 30'000.0;
};

struct SoakConfig {
  double hours = 24.0;
  acq::AcqConfig acq;  // rate, chain size, ping-pong, FIFO and packet sizes
  std::size_t storage_queue_packets = 1024;
  std::size_t visual_queue_packets = 256;
  std::uint64_t seed = 1;
  double clock_ppm = 0.0;
  ServiceModel model;
};

struct SoakResult {
  acq::SessionReport engine;
  recorder::SessionHeader session;
  eval::DelayLossReport report;
  std::uint64_t samples_received = 0;
  std::uint64_t samples_stored = 0;
  std::uint64_t visual_dropped = 0;
  std::uint64_t storage_blocked = 0;  // receive waits on a full storage queue
  double wall_s = 0;
};

/// Single-threaded discrete-event run of the whole pipeline in virtual time:
/// DRDY service, ping-pong handoff, bounded FIFO with blocking push, full
/// packets only, socket buffer back-pressure, and the recorder's receive,
/// storage and visualization stages with their queue policies. Sample
/// values are not simulated; frame, record and packet flow is.
/// `progress` is called about every simulated hour with the hours done.
SoakResult run_soak(const SoakConfig& config, const std::function<void(double)>& progress = {});

}  // namespace beats::sim
