#include "beats/recorder/recorder.hpp"

#include <sys/socket.h>

#include "beats/common/error.hpp"
#include "beats/wire/codec.hpp"

namespace beats::recorder {

Recorder::Recorder(RecorderConfig config)
    : config_(std::move(config)), session_(std::make_unique<Session>(config_)) {}

Recorder::~Recorder() {
  stopping_ = true;
  listener_.shutdown();
  {
    std::lock_guard lock(conn_mutex_);
    if (conn_fd_ >= 0) ::shutdown(conn_fd_, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
}

void Recorder::listen() {
  listener_ = Socket::listen(config_.listen);
  port_ = listener_.local_port();
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void Recorder::accept_loop() {
  while (!stopping_) {
    Socket conn = listener_.accept();
    if (!conn.valid()) {
      if (stopping_) break;
      continue;
    }
    if (session_->state() == SessionState::Idle) {
      try {
        session_->begin();
      } catch (const Error&) {
      }
    }
    if (session_->state() != SessionState::Receiving) continue;  // one stream per session
    receive(std::move(conn));
    break;
  }
  listener_.close();
}

void Recorder::receive(Socket conn) {
  {
    std::lock_guard lock(conn_mutex_);
    conn_fd_ = conn.fd();
  }
  wire::StreamDecoder decoder;
  std::vector<std::uint8_t> buf(256 * 1024);
  std::vector<wire::DataPacket> out;
  auto deliver = [this](std::vector<wire::DataPacket>& packets) {
    for (auto& p : packets) session_->on_packet(std::make_shared<const wire::DataPacket>(std::move(p)));
    packets.clear();
  };
  try {
    for (;;) {
      const std::size_t n = conn.receive(buf);
      if (n == 0) break;
      session_->add_bytes(n);
      out.clear();
      try {
        decoder.feed({buf.data(), n}, out);
      } catch (const Error&) {
        // frames completed before the corrupt one are still valid data
        deliver(out);
        throw;
      }
      deliver(out);
    }
    if (decoder.residue_size() != 0) {
      session_->on_protocol_error("connection closed inside a frame (" + std::to_string(decoder.residue_size()) +
                                  " bytes pending) at byte offset " + std::to_string(decoder.bytes_consumed()));
    }
  } catch (const StreamError& e) {
    session_->on_protocol_error(std::string(to_string(e.code())) + ": " + e.what());
  } catch (const Error& e) {
    session_->on_protocol_error(std::string(to_string(e.code())) + ": " + e.what());
  }
  {
    std::lock_guard lock(conn_mutex_);
    conn_fd_ = -1;
  }
  conn.close();
  finish();
}

void Recorder::finish() {
  try {
    session_->finalize();
  } catch (const std::exception& e) {
    std::lock_guard lock(conn_mutex_);
    receive_error_ = e.what();
  }
}

FinalizeResult Recorder::stop() {
  stopping_ = true;
  bool connected = false;
  {
    std::lock_guard lock(conn_mutex_);
    if (conn_fd_ >= 0) {
      ::shutdown(conn_fd_, SHUT_RDWR);
      connected = true;
    }
  }
  if (!connected) listener_.shutdown();
  if (accept_thread_.joinable() && accept_thread_.get_id() != std::this_thread::get_id()) accept_thread_.join();
  return session_->finalize();
}

std::optional<FinalizeResult> Recorder::wait(std::chrono::milliseconds timeout) {
  if (!session_->wait_closed(timeout)) return std::nullopt;
  try {
    return session_->finalize();
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::string Recorder::receive_error() const {
  std::lock_guard lock(conn_mutex_);
  return receive_error_;
}

}  // namespace beats::recorder
