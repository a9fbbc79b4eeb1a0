#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beats/wire/packet.hpp"

namespace beats::wire {

inline constexpr std::size_t kHeaderBytes = 4;
inline constexpr std::uint32_t kMaxPayloadBytes = 16u * 1024u * 1024u;

/// Canonical payload: UTF-8 JSON, no whitespace, fixed key order
///   {"session_id":S,"seq":N,"samples":[{"t":T,"status":[..],"ch":[..]},..]}
/// Voltages use the shortest decimal form that parses back to the same double.
std::string encode_payload(const DataPacket& packet);

/// 4-byte big-endian payload length followed by the payload.
std::vector<std::uint8_t> encode_packet(const DataPacket& packet);
void encode_packet_into(const DataPacket& packet, std::vector<std::uint8_t>& out);

/// Parses one payload. `base_offset` is only used to position error reports.
DataPacket decode_payload(std::string_view payload, std::uint64_t base_offset = 0);

inline void put_be32(std::uint32_t v, std::uint8_t* out) noexcept {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

inline std::uint32_t get_be32(const std::uint8_t* in) noexcept {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
         (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

/// Incremental framing decoder for one connection.
///
/// Tolerates packet sticking (several frames in one read) and breaking (a
/// frame split across reads); output depends only on the byte sequence,
/// never on how it was chunked. Errors are fatal for the connection.
class StreamDecoder {
 public:
  std::vector<DataPacket> feed(std::span<const std::uint8_t> chunk);
  /// Same as feed() but appends to `out` (avoids a vector per read).
  void feed(std::span<const std::uint8_t> chunk, std::vector<DataPacket>& out);

  [[nodiscard]] std::size_t residue_size() const noexcept { return buffer_.size() - read_pos_; }
  [[nodiscard]] std::uint64_t packets_decoded() const noexcept { return packets_decoded_; }
  [[nodiscard]] std::uint64_t bytes_consumed() const noexcept { return bytes_consumed_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t read_pos_ = 0;
  std::uint64_t packets_decoded_ = 0;
  std::uint64_t bytes_consumed_ = 0;
};

}  // namespace beats::wire
