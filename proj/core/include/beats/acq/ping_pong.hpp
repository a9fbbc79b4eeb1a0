#pragma once

#include <array>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "beats/common/time.hpp"

namespace beats::acq {

struct PingPongStats {
  std::uint64_t appended = 0;
  std::uint64_t dropped = 0;   // frames with no free half to land in
  std::uint64_t handoffs = 0;  // full halves handed to the consumer
  std::uint64_t partial_flushes = 0;
};

/// Two alternating halves of raw chain frames between the DRDY handler and
/// the formatter. The handler fills one half while the formatter works on
/// the other; a full half is swapped out only once the other half is free.
class PingPongBuffer {
 public:
  struct Filled {
    int half;
    std::size_t count;
    std::size_t frame_bytes;
    const std::uint8_t* bytes;
    const UtcMicros* t;
    const UtcMicros* wall;

    [[nodiscard]] std::span<const std::uint8_t> frame(std::size_t i) const noexcept {
      return {bytes + i * frame_bytes, frame_bytes};
    }
  };

  PingPongBuffer(std::size_t capacity, std::size_t frame_bytes);

  /// Producer side (DRDY handler). Never blocks on the consumer; returns
  /// false when the frame had to be dropped.
  bool append(UtcMicros t, UtcMicros wall, std::span<const std::uint8_t> raw);
  /// True while the next append is guaranteed to land.
  [[nodiscard]] bool has_room() const;
  /// Blocks until has_room() or close(); returns has_room().
  bool wait_for_room();

  /// Consumer side: blocks for a full half. After close(), a remaining
  /// partial half is returned once, then nullopt.
  std::optional<Filled> acquire();
  void release(const Filled& filled);

  /// Producer is done; wakes the consumer to flush.
  void close();

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] PingPongStats stats() const;

 private:
  enum class State { Filling, Free, Ready, Consuming };
  struct Half {
    std::vector<std::uint8_t> bytes;
    std::vector<UtcMicros> t;
    std::vector<UtcMicros> wall;
    std::size_t count = 0;
    State state = State::Free;
  };

  bool room_locked() const noexcept;
  bool try_swap_locked() noexcept;

  std::size_t capacity_;
  std::size_t frame_bytes_;
  std::array<Half, 2> halves_;
  int active_ = 0;
  bool closed_ = false;
  PingPongStats stats_;
  mutable std::mutex mutex_;
  std::condition_variable ready_cv_;
  std::condition_variable room_cv_;
};

}  // namespace beats::acq
