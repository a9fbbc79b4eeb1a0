#include "beats/acq/ping_pong.hpp"

#include <cstring>

#include "beats/common/error.hpp"

namespace beats::acq {

PingPongBuffer::PingPongBuffer(std::size_t capacity, std::size_t frame_bytes)
    : capacity_(capacity), frame_bytes_(frame_bytes) {
  if (capacity == 0 || frame_bytes == 0)
    throw Error(ErrorCode::InvalidConfig, "ping-pong halves need a positive size");
  for (auto& h : halves_) {
    h.bytes.resize(capacity * frame_bytes);
    h.t.resize(capacity);
    h.wall.resize(capacity);
  }
  halves_[0].state = State::Filling;
}

bool PingPongBuffer::room_locked() const noexcept {
  return halves_[active_].count < capacity_ || halves_[1 - active_].state == State::Free;
}

bool PingPongBuffer::try_swap_locked() noexcept {
  Half& other = halves_[1 - active_];
  if (other.state != State::Free) return false;
  halves_[active_].state = State::Ready;
  ++stats_.handoffs;
  active_ = 1 - active_;
  other.state = State::Filling;
  other.count = 0;
  return true;
}

bool PingPongBuffer::append(UtcMicros t, UtcMicros wall, std::span<const std::uint8_t> raw) {
  bool handed_off = false;
  {
    std::lock_guard lock(mutex_);
    if (raw.size() != frame_bytes_) return false;
    if (halves_[active_].count == capacity_) {
      if (!try_swap_locked()) {
        ++stats_.dropped;
        return false;
      }
      handed_off = true;
    }
    Half& h = halves_[active_];
    std::memcpy(h.bytes.data() + h.count * frame_bytes_, raw.data(), frame_bytes_);
    h.t[h.count] = t;
    h.wall[h.count] = wall;
    ++h.count;
    ++stats_.appended;
    if (h.count == capacity_ && try_swap_locked()) handed_off = true;
  }
  if (handed_off) ready_cv_.notify_one();
  return true;
}

bool PingPongBuffer::has_room() const {
  std::lock_guard lock(mutex_);
  return room_locked();
}

bool PingPongBuffer::wait_for_room() {
  std::unique_lock lock(mutex_);
  room_cv_.wait(lock, [&] { return closed_ || room_locked(); });
  return room_locked() && !closed_;
}

std::optional<PingPongBuffer::Filled> PingPongBuffer::acquire() {
  std::unique_lock lock(mutex_);
  while (true) {
    for (int i = 0; i < 2; ++i) {
      Half& h = halves_[i];
      if (h.state == State::Ready) {
        h.state = State::Consuming;
        return Filled{i, h.count, frame_bytes_, h.bytes.data(), h.t.data(), h.wall.data()};
      }
    }
    if (closed_) {
      Half& h = halves_[active_];
      if (h.state == State::Filling && h.count > 0) {
        h.state = State::Consuming;
        ++stats_.partial_flushes;
        return Filled{active_, h.count, frame_bytes_, h.bytes.data(), h.t.data(), h.wall.data()};
      }
      return std::nullopt;
    }
    ready_cv_.wait(lock);
  }
}

void PingPongBuffer::release(const Filled& filled) {
  bool handed_off = false;
  {
    std::lock_guard lock(mutex_);
    Half& h = halves_[filled.half];
    h.count = 0;
    if (filled.half == active_) {
      // the flushed partial half; keep filling into it if the producer resumes
      h.state = State::Filling;
    } else {
      h.state = State::Free;
      // the producer may have filled its half while we were busy
      if (halves_[active_].count == capacity_ && halves_[active_].state == State::Filling)
        handed_off = try_swap_locked();
    }
  }
  if (handed_off) ready_cv_.notify_one();
  room_cv_.notify_all();
}

void PingPongBuffer::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_cv_.notify_all();
  room_cv_.notify_all();
}

PingPongStats PingPongBuffer::stats() const {
  std::lock_guard lock(mutex_);
  return stats_;
}

}  // namespace beats::acq
