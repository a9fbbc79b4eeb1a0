#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

namespace beats::acq {

struct FifoStats {
  std::uint64_t pushed = 0;
  std::uint64_t popped = 0;
  std::uint64_t blocked_pushes = 0;    // push found the FIFO full
  std::uint64_t sustained_stalls = 0;  // a push stayed blocked for more than stall_alarm
  double longest_stall_s = 0.0;
  std::size_t high_water = 0;          // records
};

/// Bounded single-producer/single-consumer FIFO of fixed-size records.
///
/// Capacity is given in bytes and rounded down to whole records. push()
/// blocks while full, pop() while empty; close() lets the consumer drain
/// what is left and then makes pop() return 0.
class SampleFifo {
 public:
  SampleFifo(std::size_t capacity_bytes, std::size_t record_size,
             std::chrono::milliseconds stall_alarm = std::chrono::seconds(1));

  void push(std::span<const std::uint8_t> record);
  bool try_push(std::span<const std::uint8_t> record);

  /// Copies up to max_records whole records into `out`, blocking until at
  /// least one is available or the FIFO is closed and empty (returns 0).
  std::size_t pop(std::span<std::uint8_t> out, std::size_t max_records);
  std::size_t try_pop(std::span<std::uint8_t> out, std::size_t max_records);

  void close();

  [[nodiscard]] std::size_t record_size() const noexcept { return record_size_; }
  [[nodiscard]] std::size_t capacity_records() const noexcept { return slots_; }
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool closed() const;
  [[nodiscard]] FifoStats stats() const;

 private:
  void push_locked(std::span<const std::uint8_t> record);
  std::size_t pop_locked(std::span<std::uint8_t> out, std::size_t max_records);

  std::size_t record_size_;
  std::size_t slots_;
  std::chrono::milliseconds stall_alarm_;
  std::vector<std::uint8_t> storage_;
  std::size_t head_ = 0;  // next slot to pop
  std::size_t count_ = 0;
  bool closed_ = false;
  FifoStats stats_;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

}  // namespace beats::acq
