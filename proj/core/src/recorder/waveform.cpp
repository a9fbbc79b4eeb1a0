#include "beats/recorder/waveform.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "beats/common/error.hpp"

namespace beats::recorder {

std::string WaveformBatch::to_json() const {
  nlohmann::json j = {{"seq", seq},           {"channels", channels}, {"t", t},
                      {"data", data},         {"dropped_before", dropped_before},
                      {"filtered", filtered}, {"detrended", detrended}};
  return j.dump();
}

WaveformSubscription::WaveformSubscription(std::uint64_t id, WaveformOptions options, double rate_hz,
                                           std::size_t channel_count)
    : id_(id), options_(std::move(options)), queue_(options_.queue_batches) {
  if (options_.channels.empty()) {
    for (std::size_t c = 0; c < channel_count; ++c) options_.channels.push_back(c);
  }
  for (const auto c : options_.channels) {
    if (c >= channel_count) throw Error(ErrorCode::InvalidArgument, "waveform channel " + std::to_string(c) + " does not exist");
  }
  if (!(options_.max_points_per_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_points_per_s must be positive");
  options_.max_points_per_s = std::min(options_.max_points_per_s, kMaxPointsPerSecond);
  decimation_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(rate_hz / options_.max_points_per_s)));
  if (!(options_.batch_ms > 0.0)) throw Error(ErrorCode::InvalidArgument, "batch_ms must be positive");
  points_per_batch_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(options_.batch_ms * 1e-3 * rate_hz / static_cast<double>(decimation_))));
  if (options_.filter) {
    for (std::size_t i = 0; i < options_.channels.size(); ++i) notches_.emplace_back(rate_hz, options_.mains_hz);
  }
  pending_.channels = options_.channels;
  pending_.data.resize(options_.channels.size());
  pending_.filtered = options_.filter;
  pending_.detrended = options_.detrend;
}

void WaveformSubscription::feed(const wire::DataPacket& p) {
  const auto& chans = options_.channels;
  for (std::size_t i = 0; i < p.sample_count(); ++i) {
    const auto v = p.volts_of(i);
    if (options_.filter && !primed_) {
      for (std::size_t k = 0; k < chans.size(); ++k) notches_[k].reset(v[chans[k]]);
      primed_ = true;
    }
    const bool keep = sample_counter_++ % decimation_ == 0;
    for (std::size_t k = 0; k < chans.size(); ++k) {
      double x = v[chans[k]];
      // the filter sees every sample; decimation only thins what is shown
      if (options_.filter) x = notches_[k].process(x);
      if (keep) pending_.data[k].push_back(x);
    }
    if (keep) pending_.t.push_back(p.t[i]);
    if (pending_.t.size() >= points_per_batch_) emit();
  }
}

void WaveformSubscription::emit() {
  if (options_.detrend) {
    for (auto& ch : pending_.data) ch = metrics::detrend(ch);
  }
  pending_.seq = batch_seq_++;
  pending_.dropped_before = queue_.stats().dropped;
  WaveformBatch next;
  next.channels = pending_.channels;
  next.data.resize(pending_.data.size());
  next.filtered = pending_.filtered;
  next.detrended = pending_.detrended;
  queue_.push_drop_oldest(std::move(pending_));
  pending_ = std::move(next);
}

}  // namespace beats::recorder
