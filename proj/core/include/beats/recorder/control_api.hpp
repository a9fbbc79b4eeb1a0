#pragma once

#include <memory>
#include <thread>

#include "beats/common/socket.hpp"
#include "beats/recorder/recorder.hpp"

namespace beats::recorder {

/// Local HTTP/JSON control surface for one Recorder.
///
///   GET  /status                 session status
///   POST /session/start          idle -> receiving
///   POST /session/stop           finalize; returns the session file path and header
///   POST /save      {"enabled": bool}
///   POST /stimulus  {"class": str, "intensity": int?}
///   POST /undo
///   GET  /events
///   GET  /waveform?channels=0,1&max_points=500&filter=1&mains=50&detrend=1
///        chunked NDJSON, one WaveformBatch per line
///
/// Errors: {"error": {"code": "...", "message": "..."}} with 400/409/500/507.
class ControlServer {
 public:
  ControlServer(Recorder& recorder, Endpoint endpoint);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  /// Binds (BindFailed) and serves from a background thread.
  void start();
  void stop();
  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Recorder& recorder_;
  Endpoint endpoint_;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

}  // namespace beats::recorder
