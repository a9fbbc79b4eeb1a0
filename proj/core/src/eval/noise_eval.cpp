#include "beats/eval/noise_eval.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

#include "beats/acq/engine.hpp"
#include "beats/common/error.hpp"

namespace beats::eval {

namespace {

NoiseReference reference_for(double rate_hz) {
  for (const auto& r : kNoiseReference)
    if (r.rate_hz == rate_hz) return r;
  return {rate_hz, 0, 0, 0, 0};
}

}  // namespace

NoiseEvalRow eval_noise(double rate_hz, const NoiseEvalOptions& options) {
  acq::RunConfig cfg;
  cfg.acq.clock = acq::ClockMode::Virtual;
  cfg.acq.rate_hz = rate_hz;
  cfg.acq.device_count = options.device_count;
  cfg.acq.input = acq::InputMode::InputShort;
  cfg.acq.session_id = "eval-noise";
  cfg.emu.seed = options.seed;
  if (options.channel >= cfg.acq.channel_count())
    throw Error(ErrorCode::InvalidArgument, "channel out of range");

  std::vector<double> volts;
  volts.reserve(options.samples);
  const std::size_t ch = options.channel;
  acq::CallbackSink sink([&](const wire::DataPacket& p) {
    for (std::size_t i = 0; i < p.sample_count() && volts.size() < options.samples; ++i)
      volts.push_back(p.volts_of(i)[ch]);
  });
  acq::RunLimits limits;
  // whole packets only reach the sink; round up so the tail is not lost
  const std::uint64_t P = cfg.acq.packet_samples;
  limits.max_frames = (options.samples + P - 1) / P * P;
  const auto report = acq::run_emulated(cfg, sink, limits);
  if (volts.size() < options.samples)
    throw Error(ErrorCode::SignalTooShort, "engine delivered " + std::to_string(volts.size()) + " of " +
                                               std::to_string(options.samples) + " samples (" + report.stop_reason + ")");

  NoiseEvalRow row;
  row.reference = reference_for(rate_hz);
  row.measured = metrics::noise_stats(volts, cfg.acq.gain, cfg.acq.vref, rate_hz);
  row.channel = ch;
  row.samples = volts.size();
  return row;
}

std::vector<NoiseEvalRow> eval_noise_table(const NoiseEvalOptions& options) {
  std::vector<NoiseEvalRow> rows;
  for (const auto& r : kNoiseReference) rows.push_back(eval_noise(r.rate_hz, options));
  return rows;
}

std::string noise_table_text(const std::vector<NoiseEvalRow>& rows) {
  std::string out = "rate_hz  v_rms_uv(meas/ref)  v_pp_uv(meas/ref)  enob(meas/ref)   dr_db(meas/ref)\n";
  char line[160];
  for (const auto& r : rows) {
    const auto& m = r.measured;
    if (m.degenerate()) {
      std::snprintf(line, sizeof line, "%7.0f  %8.3f / %5.2f    %7.2f / %5.2f    degenerate        degenerate\n",
                    r.reference.rate_hz, m.v_rms_uv, r.reference.v_rms_uv, m.v_pp_uv, r.reference.v_pp_uv);
    } else {
      std::snprintf(line, sizeof line, "%7.0f  %8.3f / %5.2f    %7.2f / %5.2f    %6.3f / %5.2f   %6.2f / %5.1f\n",
                    r.reference.rate_hz, m.v_rms_uv, r.reference.v_rms_uv, m.v_pp_uv, r.reference.v_pp_uv, *m.enob,
                    r.reference.enob, *m.dynamic_range_db, r.reference.dynamic_range_db);
    }
    out += line;
  }
  return out;
}

std::string noise_table_json(const std::vector<NoiseEvalRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    const auto& m = r.measured;
    arr.push_back({
        {"rate_hz", r.reference.rate_hz},
        {"channel", r.channel},
        {"samples", r.samples},
        {"measured",
         {{"v_rms_uv", m.v_rms_uv},
          {"v_pp_uv", m.v_pp_uv},
          {"enob", m.enob ? nlohmann::json(*m.enob) : nlohmann::json(nullptr)},
          {"dynamic_range_db", m.dynamic_range_db ? nlohmann::json(*m.dynamic_range_db) : nlohmann::json(nullptr)},
          {"degenerate", m.degenerate()}}},
        {"reference",
         {{"v_rms_uv", r.reference.v_rms_uv},
          {"v_pp_uv", r.reference.v_pp_uv},
          {"enob", r.reference.enob},
          {"dynamic_range_db", r.reference.dynamic_range_db}}},
    });
  }
  return arr.dump(2);
}

}  // namespace beats::eval
