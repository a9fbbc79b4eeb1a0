#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace beats {

/// host:port, with host defaulting to 127.0.0.1 when only ":port" or "port" is given.
struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  static Endpoint parse(const std::string& text);
  [[nodiscard]] std::string str() const { return host + ":" + std::to_string(port); }
};

/// Owning POSIX socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  /// Throws TransportError.
  static Socket connect(const Endpoint& endpoint);
  /// Throws BindFailed. Port 0 picks an ephemeral port; see local_port().
  static Socket listen(const Endpoint& endpoint, int backlog = 4);

  /// Blocks; returns an invalid socket if the listener was shut down.
  Socket accept();
  void send_all(std::span<const std::uint8_t> bytes);
  /// Returns 0 on orderly shutdown by the peer.
  std::size_t receive(std::span<std::uint8_t> buffer);
  /// Wakes up any thread blocked in accept/receive.
  void shutdown() noexcept;
  void close() noexcept;

  [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
  [[nodiscard]] int fd() const noexcept { return fd_; }
  [[nodiscard]] std::uint16_t local_port() const;

 private:
  int fd_ = -1;
};

}  // namespace beats
