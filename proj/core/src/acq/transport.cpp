#include "beats/acq/transport.hpp"

#include "beats/wire/codec.hpp"

namespace beats::acq {

void TcpSink::open(const std::string& session_id, std::size_t devices, std::size_t channels) {
  socket_ = Socket::connect(endpoint_);
  wire::DataPacket probe;
  probe.session_id = session_id;
  probe.device_count = devices;
  probe.channel_count = channels;
  send(probe);
}

void TcpSink::send(const wire::DataPacket& packet) {
  buffer_.clear();
  wire::encode_packet_into(packet, buffer_);
  socket_.send_all(buffer_);
  bytes_sent_ += buffer_.size();
}

void TcpSink::close() {
  socket_.shutdown();
  socket_.close();
}

void MemorySink::send(const wire::DataPacket& packet) {
  if (callback_) callback_(packet);
  std::lock_guard lock(mutex_);
  packets_.push_back(packet);
}

std::vector<wire::DataPacket> MemorySink::packets() const {
  std::lock_guard lock(mutex_);
  return packets_;
}

std::size_t MemorySink::packet_count() const {
  std::lock_guard lock(mutex_);
  return packets_.size();
}

void DroppingSink::send(const wire::DataPacket& packet) {
  if (drop_.count(packet.seq)) return;
  inner_.send(packet);
}

}  // namespace beats::acq
