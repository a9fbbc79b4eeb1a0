#include "beats/acq/sample_fifo.hpp"

#include <algorithm>
#include <cstring>

#include "beats/common/error.hpp"

namespace beats::acq {

SampleFifo::SampleFifo(std::size_t capacity_bytes, std::size_t record_size,
                       std::chrono::milliseconds stall_alarm)
    : record_size_(record_size),
      slots_(record_size ? capacity_bytes / record_size : 0),
      stall_alarm_(stall_alarm) {
  if (slots_ == 0)
    throw Error(ErrorCode::InvalidConfig, "FIFO capacity smaller than one record");
  storage_.resize(slots_ * record_size_);
}

void SampleFifo::push_locked(std::span<const std::uint8_t> record) {
  const std::size_t tail = (head_ + count_) % slots_;
  std::memcpy(storage_.data() + tail * record_size_, record.data(), record_size_);
  ++count_;
  ++stats_.pushed;
  stats_.high_water = std::max(stats_.high_water, count_);
}

void SampleFifo::push(std::span<const std::uint8_t> record) {
  if (record.size() != record_size_)
    throw Error(ErrorCode::InvalidArgument, "record size mismatch");
  std::unique_lock lock(mutex_);
  if (closed_) throw Error(ErrorCode::InvalidState, "push on a closed FIFO");
  if (count_ == slots_) {
    ++stats_.blocked_pushes;
    const auto start = std::chrono::steady_clock::now();
    bool alarmed = false;
    while (count_ == slots_ && !closed_) {
      if (!not_full_.wait_for(lock, stall_alarm_, [&] { return count_ < slots_ || closed_; }) && !alarmed) {
        ++stats_.sustained_stalls;
        alarmed = true;
      }
    }
    const double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    stats_.longest_stall_s = std::max(stats_.longest_stall_s, waited);
    if (closed_) throw Error(ErrorCode::InvalidState, "FIFO closed while a push was blocked");
  }
  push_locked(record);
  lock.unlock();
  not_empty_.notify_one();
}

bool SampleFifo::try_push(std::span<const std::uint8_t> record) {
  if (record.size() != record_size_)
    throw Error(ErrorCode::InvalidArgument, "record size mismatch");
  {
    std::lock_guard lock(mutex_);
    if (closed_ || count_ == slots_) return false;
    push_locked(record);
  }
  not_empty_.notify_one();
  return true;
}

std::size_t SampleFifo::pop_locked(std::span<std::uint8_t> out, std::size_t max_records) {
  const std::size_t n = std::min({count_, max_records, out.size() / record_size_});
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(out.data() + i * record_size_, storage_.data() + head_ * record_size_, record_size_);
    head_ = (head_ + 1) % slots_;
  }
  count_ -= n;
  stats_.popped += n;
  return n;
}

std::size_t SampleFifo::pop(std::span<std::uint8_t> out, std::size_t max_records) {
  std::unique_lock lock(mutex_);
  not_empty_.wait(lock, [&] { return count_ > 0 || closed_; });
  const std::size_t n = pop_locked(out, max_records);
  lock.unlock();
  if (n) not_full_.notify_one();
  return n;
}

std::size_t SampleFifo::try_pop(std::span<std::uint8_t> out, std::size_t max_records) {
  std::size_t n = 0;
  {
    std::lock_guard lock(mutex_);
    n = pop_locked(out, max_records);
  }
  if (n) not_full_.notify_one();
  return n;
}

void SampleFifo::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  not_empty_.notify_all();
  not_full_.notify_all();
}

std::size_t SampleFifo::size() const {
  std::lock_guard lock(mutex_);
  return count_;
}

bool SampleFifo::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

FifoStats SampleFifo::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

}  // namespace beats::acq
