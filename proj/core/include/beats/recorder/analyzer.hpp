#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <string>

#include "beats/wire/packet.hpp"

namespace beats::recorder {

/// Consumer of the analysis queue. Each registered analyzer runs in its own
/// context; consume() may be slow, the queue in front of it drops oldest.
class Analyzer {
 public:
  virtual ~Analyzer() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual void consume(const wire::DataPacket& packet) = 0;
  /// JSON object describing the current result.
  [[nodiscard]] virtual std::string summary_json() const { return "{}"; }
  /// Asks a blocked consume() to return; called before the session joins the analyzer.
  virtual void cancel() {}
};

class CountingAnalyzer final : public Analyzer {
 public:
  [[nodiscard]] std::string name() const override { return "count"; }
  void consume(const wire::DataPacket& packet) override { samples_ += packet.sample_count(); }
  [[nodiscard]] std::string summary_json() const override;
  [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }

 private:
  std::atomic<std::uint64_t> samples_{0};
};

/// EEG band powers of one channel over a trailing window.
class BandPowerAnalyzer final : public Analyzer {
 public:
  BandPowerAnalyzer(std::size_t channel, double rate_hz, double window_s = 10.0);

  [[nodiscard]] std::string name() const override { return "band_power"; }
  void consume(const wire::DataPacket& packet) override;
  [[nodiscard]] std::string summary_json() const override;

 private:
  std::size_t channel_;
  double rate_;
  std::size_t window_;
  mutable std::mutex mutex_;
  std::deque<double> samples_;
};

}  // namespace beats::recorder
