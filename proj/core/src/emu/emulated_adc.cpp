#include "beats/emu/emulated_adc.hpp"

#include <chrono>

#include "beats/common/error.hpp"

namespace beats::emu {

EmulatedAdc::EmulatedAdc(ChainOptions options, ClockPacing pacing)
    : options_(options), pacing_(pacing), chain_(std::move(options)) {
  if (pacing_ != ClockPacing::Manual) clock_thread_ = std::thread([this] { run_clock(); });
}

EmulatedAdc::~EmulatedAdc() { shutdown(); }

void EmulatedAdc::shutdown() {
  {
    std::lock_guard lock(mutex_);
    quit_ = true;
  }
  state_cv_.notify_all();
  if (clock_thread_.joinable()) clock_thread_.join();
}

void EmulatedAdc::set_drdy_handler(DrdyHandler handler) {
  std::lock_guard lock(mutex_);
  drdy_ = std::move(handler);
}

void EmulatedAdc::set_pacing_gate(PacingGate gate) {
  std::lock_guard lock(mutex_);
  gate_ = std::move(gate);
}

void EmulatedAdc::add_frame_observer(FrameObserver observer) {
  std::lock_guard lock(mutex_);
  observers_.push_back(std::move(observer));
}

SpiCounters EmulatedAdc::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

void EmulatedAdc::set_chip_select(bool asserted) {
  std::lock_guard lock(mutex_);
  selected_ = asserted;
  if (!asserted) {
    // CS high resets the serial interface
    phase_ = Phase::Opcode;
    wreg_payload_.clear();
    dout_.clear();
    dout_pos_ = 0;
    shifting_readback_ = false;
  }
}

std::uint8_t EmulatedAdc::transfer(std::uint8_t din) {
  std::uint8_t out = 0;
  bool changed = false;
  {
    std::lock_guard lock(mutex_);
    const bool was_converting = chain_.converting();
    out = shift_locked(din);
    changed = was_converting != chain_.converting();
  }
  if (changed) notify_state_change();
  return out;
}

void EmulatedAdc::transfer(std::span<const std::uint8_t> din, std::span<std::uint8_t> dout) {
  bool changed = false;
  {
    std::lock_guard lock(mutex_);
    const bool was_converting = chain_.converting();
    for (std::size_t i = 0; i < din.size(); ++i) dout[i] = shift_locked(din[i]);
    changed = was_converting != chain_.converting();
  }
  if (changed) notify_state_change();
}

void EmulatedAdc::notify_state_change() { state_cv_.notify_all(); }

std::uint8_t EmulatedAdc::shift_locked(std::uint8_t din) {
  ++counters_.bytes;
  if (!selected_) return 0x00;
  std::uint8_t out = 0x00;
  const bool readback = shifting_readback_;
  if (dout_pos_ < dout_.size()) {
    out = dout_[dout_pos_++];
    if (dout_pos_ == dout_.size()) {
      dout_.clear();
      dout_pos_ = 0;
      shifting_readback_ = false;
    }
  }
  if (!readback) decode_locked(din);
  return out;
}

void EmulatedAdc::decode_locked(std::uint8_t din) {
  switch (phase_) {
    case Phase::Opcode: {
      if (din == 0x00) return;  // NOP
      if (opcode::is_rreg(din) || opcode::is_wreg(din)) {
        pending_op_ = din;
        phase_ = opcode::is_rreg(din) ? Phase::RregCount : Phase::WregCount;
        return;
      }
      try {
        if (din == opcode::kRdata) {
          if (!chain_.has_frame()) {
            ++counters_.empty_reads;
            return;
          }
          const auto& f = chain_.latest_frame();
          dout_.resize(f.byte_size());
          f.serialize_into(dout_);
          dout_pos_ = 0;
          shifting_readback_ = true;
          return;
        }
        chain_.execute_command(din);
      } catch (const Error&) {
        ++counters_.rejected_commands;
      }
      return;
    }
    case Phase::RregCount: {
      phase_ = Phase::Opcode;
      try {
        auto result = chain_.read_registers(pending_op_ & opcode::kAddressMask, std::size_t{din} + 1);
        dout_ = std::move(result.data);
        dout_pos_ = 0;
        shifting_readback_ = !dout_.empty();
      } catch (const Error&) {
        ++counters_.rejected_commands;
      }
      return;
    }
    case Phase::WregCount:
      pending_count_ = std::size_t{din} + 1;
      wreg_payload_.clear();
      phase_ = Phase::WregData;
      return;
    case Phase::WregData:
      wreg_payload_.push_back(din);
      if (wreg_payload_.size() == pending_count_) {
        phase_ = Phase::Opcode;
        try {
          chain_.write_registers(pending_op_ & opcode::kAddressMask, wreg_payload_);
        } catch (const Error&) {
          ++counters_.rejected_commands;
        }
      }
      return;
  }
}

void EmulatedAdc::emit_edge(const ChainFrame& frame) {
  // called without the lock held; the handler will clock RDATA through transfer()
  for (const auto& obs : observers_) obs(frame);
  if (drdy_) drdy_(DrdyEdge{frame.t_conv_us});
}

bool EmulatedAdc::tick() {
  const ChainFrame* frame = nullptr;
  {
    std::lock_guard lock(mutex_);
    if (!chain_.converting()) return false;
    frame = &chain_.step_conversion();
    if (chain_.mode() == ReadMode::Rdatac && selected_) {
      dout_.resize(frame->byte_size());
      frame->serialize_into(dout_);
      dout_pos_ = 0;
    }
  }
  emit_edge(*frame);
  return true;
}

void EmulatedAdc::run_clock() {
  using clock = std::chrono::steady_clock;
  std::unique_lock lock(mutex_);
  while (!quit_) {
    state_cv_.wait(lock, [&] { return quit_ || chain_.converting(); });
    if (quit_) break;

    // Map conversion time onto the wall clock at the start of each run.
    const auto wall_origin = clock::now();
    const double conv_origin = chain_.now_us();

    while (!quit_ && chain_.converting()) {
      if (pacing_ == ClockPacing::Virtual) {
        if (gate_) {
          auto gate = gate_;
          lock.unlock();
          const bool go = gate();
          lock.lock();
          if (!go) {
            state_cv_.wait(lock, [&] { return quit_ || !chain_.converting(); });
            break;
          }
          if (quit_ || !chain_.converting()) break;
        }
      } else {
        const double next_us = chain_.now_us() + chain_.period_us();
        const auto deadline =
            wall_origin + std::chrono::duration_cast<clock::duration>(
                              std::chrono::duration<double, std::micro>(next_us - conv_origin));
        if (state_cv_.wait_until(lock, deadline, [&] { return quit_ || !chain_.converting(); }))
          break;
        const auto behind = clock::now() - deadline;
        if (behind > std::chrono::duration<double, std::micro>(chain_.period_us()))
          ++counters_.late_edges;
      }
      const ChainFrame& frame = chain_.step_conversion();
      if (chain_.mode() == ReadMode::Rdatac && selected_) {
        dout_.resize(frame.byte_size());
        frame.serialize_into(dout_);
        dout_pos_ = 0;
      }
      lock.unlock();
      emit_edge(frame);
      lock.lock();
    }
  }
}

}  // namespace beats::emu
