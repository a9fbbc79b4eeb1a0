#pragma once

#include <chrono>
#include <functional>
#include <set>
#include <string>

#include "beats/acq/engine.hpp"
#include "beats/eval/delay_report.hpp"
#include "beats/recorder/recorder.hpp"

namespace beats::eval {

struct LoopbackOptions {
  acq::RunConfig run;
  /// listen/rate/gain/vref/packet size are taken from `run`.
  recorder::RecorderConfig recorder;
  acq::RunLimits limits;
  std::set<std::uint64_t> drop_seqs;  // fault injection at the transport
  std::string tap_path;               // copy of every transmitted packet
  std::function<void(emu::EmulatedAdc&)> setup;
  /// Called once the recorder listens, before the engine connects.
  std::function<void(recorder::Recorder&)> on_recorder;
  std::chrono::milliseconds finalize_timeout{std::chrono::minutes(5)};
};

struct LoopbackResult {
  acq::SessionReport engine;
  recorder::FinalizeResult session;
  DelayLossReport report;
};

/// Engine and recorder in one process, connected over a loopback TCP socket.
LoopbackResult run_loopback(LoopbackOptions options);

}  // namespace beats::eval
