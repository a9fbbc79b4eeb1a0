#include "beats/eval/delay_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace beats::eval {

namespace {

DelayDimension from_tracker(const DelayTracker& d, bool measured) {
  return {measured, d.max_s(), d.mean_s(), d.hourly_max()};
}

DelayDimension from_summary(const recorder::DelaySummary& d) {
  return {d.count > 0, d.max_s, d.mean_s, d.hourly_max_s};
}

nlohmann::json dim_json(const DelayDimension& d, double duration_h) {
  if (!d.measured) return nullptr;
  return {{"max_s", d.max_s},
          {"mean_s", d.mean_s},
          {"hourly_max_s", d.hourly_max_s},
          {"growth_ratio", d.growth_ratio(duration_h)}};
}

}  // namespace

double DelayDimension::growth_ratio(double duration_h) const {
  const auto complete = static_cast<std::size_t>(std::floor(duration_h + 1e-9));
  if (!measured || complete < 2 || hourly_max_s.size() < complete) return 0.0;
  const double first = hourly_max_s.front();
  const double last = hourly_max_s[complete - 1];
  if (first <= 0) return last > 0 ? INFINITY : 0.0;
  return last / first;
}

double DelayLossReport::max_delay_s() const {
  double m = 0;
  for (const auto* d : {&adc, &trans, &save, &plot})
    if (d->measured) m = std::max(m, d->max_s);
  return m;
}

double DelayLossReport::avg_max_delay_per_hour() const {
  return duration_h > 0 ? max_delay_s() / duration_h : 0.0;
}

bool DelayLossReport::frames_accounted() const {
  return frames == packets_sent * packet_samples + in_flight + dropped_frames;
}

bool DelayLossReport::delay_bounded(double limit) const {
  for (const auto* d : {&adc, &trans, &save, &plot})
    if (d->measured && d->growth_ratio(duration_h) > limit) return false;
  return true;
}

std::string DelayLossReport::to_json() const {
  nlohmann::json j = {
      {"duration_h", duration_h},
      {"delay_s",
       {{"adc", dim_json(adc, duration_h)},
        {"trans", dim_json(trans, duration_h)},
        {"save", dim_json(save, duration_h)},
        {"plot", dim_json(plot, duration_h)}}},
      {"loss_packets", {{"mp", mp_loss_packets}, {"sw", sw_loss_packets}}},
      {"max_delay_s", max_delay_s()},
      {"avg_max_delay_per_hour_s", avg_max_delay_per_hour()},
      {"overruns", overruns},
      {"frames", frames},
      {"dropped_frames", dropped_frames},
      {"packets_sent", packets_sent},
      {"packets_received", packets_received},
      {"in_flight", in_flight},
      {"packet_samples", packet_samples},
      {"frames_accounted", frames_accounted()},
      {"delay_bounded", delay_bounded()},
  };
  return j.dump(2);
}

std::string DelayLossReport::table_text() const {
  auto cell = [](const DelayDimension& d) {
    char b[16];
    if (d.measured)
      std::snprintf(b, sizeof b, "%8.4f", d.max_s);
    else
      std::snprintf(b, sizeof b, "%8s", "-");
    return std::string(b);
  };
  char line[200];
  std::snprintf(line, sizeof line, "%8.2f |%s%s%s%s | %4llu %4llu\n", duration_h, cell(adc).c_str(),
                cell(trans).c_str(), cell(save).c_str(), cell(plot).c_str(),
                static_cast<unsigned long long>(mp_loss_packets), static_cast<unsigned long long>(sw_loss_packets));
  return std::string("  time_h |     ADC   Trans    Save    Plot |   MP   SW\n") + line;
}

DelayLossReport delay_loss_report(const acq::SessionReport& engine, const recorder::SessionHeader& session) {
  DelayLossReport r;
  const auto span_us = engine.last_sample_us - engine.first_sample_us;
  r.duration_h = engine.frames_fetched && engine.rate_hz > 0
                     ? static_cast<double>(engine.frames_fetched) / engine.rate_hz / 3600.0
                     : static_cast<double>(std::max<std::int64_t>(span_us, 0)) / 3.6e9;
  r.adc = from_tracker(engine.adc_delay, engine.delays_measured);
  r.trans = from_tracker(engine.trans_delay, engine.delays_measured);
  r.save = from_summary(session.save_delay);
  r.plot = from_summary(session.plot_delay);
  r.mp_loss_packets = engine.mp_loss_packets;
  r.sw_loss_packets = session.seq_gaps;
  r.overruns = engine.overruns;
  r.frames = engine.frames_fetched;
  r.dropped_frames = engine.pingpong_drops;
  r.packets_sent = engine.packets_sent;
  r.packets_received = session.packets_received;
  r.in_flight = engine.in_flight;
  r.packet_samples = session.packet_samples;
  return r;
}

}  // namespace beats::eval
