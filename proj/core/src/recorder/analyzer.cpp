#include "beats/recorder/analyzer.hpp"

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "beats/metrics/spectrum.hpp"

namespace beats::recorder {

std::string CountingAnalyzer::summary_json() const {
  return nlohmann::json{{"samples", samples_.load()}}.dump();
}

BandPowerAnalyzer::BandPowerAnalyzer(std::size_t channel, double rate_hz, double window_s)
    : channel_(channel), rate_(rate_hz), window_(static_cast<std::size_t>(std::llround(rate_hz * window_s))) {}

void BandPowerAnalyzer::consume(const wire::DataPacket& p) {
  if (channel_ >= p.channel_count) return;
  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < p.sample_count(); ++i) samples_.push_back(p.volts[i * p.channel_count + channel_]);
  while (samples_.size() > window_) samples_.pop_front();
}

std::string BandPowerAnalyzer::summary_json() const {
  std::vector<double> x;
  {
    std::lock_guard lock(mutex_);
    x.assign(samples_.begin(), samples_.end());
  }
  nlohmann::json j = {{"channel", channel_}, {"samples", x.size()}};
  if (static_cast<double>(x.size()) >= 2.0 * rate_) {
    const auto bp = metrics::band_power(x, rate_);
    nlohmann::json bands;
    for (std::size_t b = 0; b < metrics::kEegBands.size(); ++b)
      bands[std::string(metrics::kEegBands[b].name)] = bp.get(b);
    j["bands_uv2"] = bands;
    j["alpha_fraction"] = bp.fraction(2);
  }
  return j.dump();
}

}  // namespace beats::recorder
