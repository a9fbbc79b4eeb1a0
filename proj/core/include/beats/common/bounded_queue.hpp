#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

namespace beats {

struct QueueStats {
  std::uint64_t pushed = 0;
  std::uint64_t popped = 0;
  std::uint64_t dropped = 0;          // drop-oldest evictions
  std::uint64_t blocked_pushes = 0;   // producer had to wait
  std::uint64_t alarms = 0;           // producer waited longer than the alarm threshold
  std::size_t high_water = 0;
};

/// Bounded multi-purpose queue with two overflow policies chosen per push:
/// block (integrity path) or evict the oldest element (best-effort path).
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  /// Blocks while full. Returns false if the queue was closed.
  bool push_blocking(T value, std::chrono::milliseconds alarm_after = std::chrono::seconds(1)) {
    std::unique_lock lock(mutex_);
    if (items_.size() >= capacity_ && !closed_) {
      ++stats_.blocked_pushes;
      if (!not_full_.wait_for(lock, alarm_after, [&] { return items_.size() < capacity_ || closed_; })) {
        ++stats_.alarms;
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
      }
    }
    if (closed_) return false;
    push_locked(std::move(value));
    lock.unlock();
    not_empty_.notify_one();
    return true;
  }

  /// Never blocks; evicts the oldest element when full. Returns true if something was evicted.
  bool push_drop_oldest(T value) {
    bool evicted = false;
    {
      std::lock_guard lock(mutex_);
      if (closed_) return false;
      if (items_.size() >= capacity_) {
        items_.pop_front();
        ++stats_.dropped;
        evicted = true;
      }
      push_locked(std::move(value));
    }
    not_empty_.notify_one();
    return evicted;
  }

  /// Waits up to `timeout` for an element; nullopt on timeout or when closed and empty.
  std::optional<T> pop_for(std::chrono::microseconds timeout) {
    std::unique_lock lock(mutex_);
    if (!not_empty_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; })) return std::nullopt;
    return pop_locked(lock);
  }

  /// Blocks until an element arrives or the queue is closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    return pop_locked(lock);
  }

  /// Moves everything currently queued into `out`; returns the count.
  std::size_t drain(std::vector<T>& out) {
    std::size_t n = 0;
    {
      std::lock_guard lock(mutex_);
      n = items_.size();
      for (auto& v : items_) out.push_back(std::move(v));
      items_.clear();
      stats_.popped += n;
    }
    if (n) not_full_.notify_all();
    return n;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  [[nodiscard]] bool closed() const {
    std::lock_guard lock(mutex_);
    return closed_;
  }
  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] QueueStats stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
  }

 private:
  void push_locked(T value) {
    items_.push_back(std::move(value));
    ++stats_.pushed;
    if (items_.size() > stats_.high_water) stats_.high_water = items_.size();
  }

  std::optional<T> pop_locked(std::unique_lock<std::mutex>& lock) {
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    ++stats_.popped;
    lock.unlock();
    not_full_.notify_one();
    return v;
  }

  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  QueueStats stats_;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

}  // namespace beats
