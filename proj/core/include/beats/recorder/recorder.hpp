#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "beats/common/socket.hpp"
#include "beats/recorder/session.hpp"

namespace beats::recorder {

/// TCP front end: accepts one engine connection and feeds its packets into a
/// Session from a single receive context. EOF or a protocol error finalizes.
class Recorder {
 public:
  explicit Recorder(RecorderConfig config);
  ~Recorder();
  Recorder(const Recorder&) = delete;
  Recorder& operator=(const Recorder&) = delete;

  /// Binds the listen endpoint and starts accepting. Throws BindFailed.
  void listen();
  [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

  Session& session() noexcept { return *session_; }

  /// Closes the connection (if any) and finalizes.
  FinalizeResult stop();
  /// Blocks until the session is closed; returns its result.
  std::optional<FinalizeResult> wait(std::chrono::milliseconds timeout);

  /// Last finalize failure, if finalize ran in the receive context and threw.
  [[nodiscard]] std::string receive_error() const;

 private:
  void accept_loop();
  void receive(Socket conn);
  void finish();

  RecorderConfig config_;
  std::unique_ptr<Session> session_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::thread accept_thread_;
  std::atomic<bool> stopping_{false};

  mutable std::mutex conn_mutex_;
  int conn_fd_ = -1;
  std::string receive_error_;
};

}  // namespace beats::recorder
