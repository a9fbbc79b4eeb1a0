#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "beats/emu/adc_interface.hpp"
#include "beats/emu/device_chain.hpp"

namespace beats::emu {

enum class ClockPacing {
  Manual,    // caller drives conversions through tick()
  Realtime,  // conversions follow the wall clock
  Virtual,   // conversions as fast as the host accepts them
};

struct SpiCounters {
  std::uint64_t bytes = 0;
  std::uint64_t rejected_commands = 0;  // illegal in the current mode, or unknown
  std::uint64_t empty_reads = 0;        // RDATA before the first conversion
  std::uint64_t late_edges = 0;         // realtime: edge fired > 1 period behind schedule
};

/// DeviceChain behind a byte-level SPI shift register plus a conversion clock.
///
/// Commands are decoded byte by byte exactly as a host would clock them.
/// Illegal commands are ignored like on hardware and only show up in the
/// counters; the host notices through read-back. In daisy-chain mode every
/// device decodes the same command; RREG and RDATA shift out device 1's
/// bytes first, followed by each downstream device.
class EmulatedAdc final : public AdcInterface {
 public:
  using FrameObserver = std::function<void(const ChainFrame&)>;
  /// Virtual pacing: called before each conversion; returning false stops the clock.
  using PacingGate = std::function<bool()>;

  explicit EmulatedAdc(ChainOptions options = {}, ClockPacing pacing = ClockPacing::Manual);
  ~EmulatedAdc() override;

  EmulatedAdc(const EmulatedAdc&) = delete;
  EmulatedAdc& operator=(const EmulatedAdc&) = delete;

  void set_chip_select(bool asserted) override;
  std::uint8_t transfer(std::uint8_t din) override;
  void transfer(std::span<const std::uint8_t> din, std::span<std::uint8_t> dout) override;
  void set_drdy_handler(DrdyHandler handler) override;

  void set_pacing_gate(PacingGate gate);
  void add_frame_observer(FrameObserver observer);

  /// Manual pacing: one conversion + DRDY edge. Returns false if not converting.
  bool tick();

  /// Stops the clock thread (if any) and waits for it.
  void shutdown();

  /// Direct access for test setup; do not hold across SPI traffic from other threads.
  template <typename Fn>
  decltype(auto) with_chain(Fn&& fn) {
    std::lock_guard lock(mutex_);
    return fn(chain_);
  }

  [[nodiscard]] SpiCounters counters() const;
  [[nodiscard]] ClockPacing pacing() const noexcept { return pacing_; }

 private:
  enum class Phase { Opcode, RregCount, WregCount, WregData };

  std::uint8_t shift_locked(std::uint8_t din);
  void decode_locked(std::uint8_t din);
  void run_clock();
  void emit_edge(const ChainFrame& frame);
  void notify_state_change();

  ChainOptions options_;
  ClockPacing pacing_;
  mutable std::mutex mutex_;
  DeviceChain chain_;
  DrdyHandler drdy_;
  PacingGate gate_;
  std::vector<FrameObserver> observers_;

  bool selected_ = false;
  Phase phase_ = Phase::Opcode;
  std::uint8_t pending_op_ = 0;
  std::size_t pending_count_ = 0;
  std::vector<std::uint8_t> wreg_payload_;
  std::vector<std::uint8_t> dout_;
  std::size_t dout_pos_ = 0;
  bool shifting_readback_ = false;  // DIN is ignored while RDATA/RREG bytes drain

  SpiCounters counters_;

  std::thread clock_thread_;
  std::condition_variable state_cv_;
  bool quit_ = false;
};

}  // namespace beats::emu
