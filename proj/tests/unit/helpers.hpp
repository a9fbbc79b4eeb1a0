#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "beats/wire/packet.hpp"

namespace beats::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("beats-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::string str(const std::string& leaf = {}) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

/// Synthetic stream: sample k has t = t0 + 250 k and channel c carries a
/// value unique to (k, c).
inline wire::DataPacket make_packet(std::uint64_t seq, std::size_t samples = 160, std::size_t devices = 4,
                                    UtcMicros t0 = 1'700'000'000'000'000, std::string id = "s1",
                                    double period_us = 250) {
  wire::DataPacket p;
  p.session_id = std::move(id);
  p.seq = seq;
  p.device_count = devices;
  p.channel_count = devices * 8;
  p.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto k = seq * samples + i;
    p.t.push_back(t0 + static_cast<UtcMicros>(std::llround(period_us * static_cast<double>(k))));
    for (std::size_t d = 0; d < devices; ++d) p.status.push_back(0xC00000u | static_cast<std::uint32_t>(k & 0xF));
    for (std::size_t c = 0; c < p.channel_count; ++c)
      p.volts.push_back(1e-6 * std::sin(0.001 * static_cast<double>(k) + static_cast<double>(c)));
  }
  return p;
}

inline std::shared_ptr<const wire::DataPacket> shared(wire::DataPacket p) {
  return std::make_shared<const wire::DataPacket>(std::move(p));
}

/// Polls `pred` until true or the timeout passes.
inline bool eventually(const std::function<bool()>& pred,
                       std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return pred();
}

}  // namespace beats::testing
