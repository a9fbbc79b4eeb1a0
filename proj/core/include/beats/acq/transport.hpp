#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "beats/common/socket.hpp"
#include "beats/wire/packet.hpp"

namespace beats::acq {

/// Where the packager hands finished packets. Called from one context only.
class PacketSink {
 public:
  virtual ~PacketSink() = default;
  /// Called before START; failure here aborts the run before any conversion.
  virtual void open(const std::string& session_id, std::size_t devices, std::size_t channels) = 0;
  virtual void send(const wire::DataPacket& packet) = 0;
  virtual void close() {}
};

/// Length-prefixed JSON over TCP. open() connects and sends a zero-sample
/// handshake packet carrying the session id.
class TcpSink final : public PacketSink {
 public:
  explicit TcpSink(Endpoint endpoint) : endpoint_(std::move(endpoint)) {}

  void open(const std::string& session_id, std::size_t devices, std::size_t channels) override;
  void send(const wire::DataPacket& packet) override;
  void close() override;

  [[nodiscard]] std::uint64_t bytes_sent() const noexcept { return bytes_sent_; }

 private:
  Endpoint endpoint_;
  Socket socket_;
  std::vector<std::uint8_t> buffer_;
  std::uint64_t bytes_sent_ = 0;
};

/// Keeps packets in memory; for tests and in-process pipelines.
class MemorySink final : public PacketSink {
 public:
  using Callback = std::function<void(const wire::DataPacket&)>;
  MemorySink() = default;
  explicit MemorySink(Callback cb) : callback_(std::move(cb)) {}

  void open(const std::string&, std::size_t, std::size_t) override {}
  void send(const wire::DataPacket& packet) override;

  [[nodiscard]] std::vector<wire::DataPacket> packets() const;
  [[nodiscard]] std::size_t packet_count() const;

 private:
  Callback callback_;
  mutable std::mutex mutex_;
  std::vector<wire::DataPacket> packets_;
};

/// Hands packets to a callback without keeping them.
class CallbackSink final : public PacketSink {
 public:
  using Callback = std::function<void(const wire::DataPacket&)>;
  explicit CallbackSink(Callback cb) : callback_(std::move(cb)) {}

  void open(const std::string&, std::size_t, std::size_t) override {}
  void send(const wire::DataPacket& packet) override { callback_(packet); }

 private:
  Callback callback_;
};

/// Fault injection: silently discards the listed sequence numbers.
class DroppingSink final : public PacketSink {
 public:
  DroppingSink(PacketSink& inner, std::set<std::uint64_t> drop_seqs)
      : inner_(inner), drop_(std::move(drop_seqs)) {}

  void open(const std::string& id, std::size_t d, std::size_t c) override { inner_.open(id, d, c); }
  void send(const wire::DataPacket& packet) override;
  void close() override { inner_.close(); }

 private:
  PacketSink& inner_;
  std::set<std::uint64_t> drop_;
};

}  // namespace beats::acq
