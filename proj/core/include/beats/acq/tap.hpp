#pragma once

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "beats/acq/transport.hpp"
#include "beats/common/time.hpp"

namespace beats::acq {

/// Binary copy of every sample the engine transmitted, in send order:
/// "BEATSTAP", u32 devices, u32 channels, then per sample
/// [i64 t][u32 status x devices][f64 volts x channels], little-endian.
class TapWriter {
 public:
  TapWriter(const std::string& path, std::size_t devices, std::size_t channels);
  ~TapWriter();
  TapWriter(const TapWriter&) = delete;
  TapWriter& operator=(const TapWriter&) = delete;

  void write(const wire::DataPacket& packet);
  void flush();
  [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }

 private:
  std::FILE* file_ = nullptr;
  std::size_t devices_, channels_;
  std::uint64_t samples_ = 0;
};

class TapReader {
 public:
  explicit TapReader(const std::string& path);
  ~TapReader();
  TapReader(const TapReader&) = delete;
  TapReader& operator=(const TapReader&) = delete;

  /// False at end of file.
  bool next(UtcMicros& t, std::vector<std::uint32_t>& status, std::vector<double>& volts);
  [[nodiscard]] std::size_t devices() const noexcept { return devices_; }
  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }

 private:
  std::FILE* file_ = nullptr;
  std::size_t devices_ = 0, channels_ = 0;
};

/// Forwards to `inner` and records what was actually handed over.
class TapSink final : public PacketSink {
 public:
  TapSink(PacketSink& inner, std::string path) : inner_(inner), path_(std::move(path)) {}

  void open(const std::string& id, std::size_t devices, std::size_t channels) override;
  void send(const wire::DataPacket& packet) override;
  void close() override;

 private:
  PacketSink& inner_;
  std::string path_;
  std::unique_ptr<TapWriter> writer_;
};

}  // namespace beats::acq
