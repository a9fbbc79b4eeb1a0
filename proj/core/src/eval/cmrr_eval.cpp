#include "beats/eval/cmrr_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <nlohmann/json.hpp>

#include "beats/acq/config.hpp"
#include "beats/acq/translate.hpp"
#include "beats/common/error.hpp"

namespace beats::eval {

namespace {

using emu::SignalSource;

emu::DeviceChain make_chain(const CmrrEvalOptions& o, acq::AcqConfig& cfg) {
  cfg.device_count = o.device_count;
  cfg.rate_hz = o.rate_hz;
  cfg.srb1 = false;
  cfg.input = acq::InputMode::Normal;
  acq::validate(cfg);
  emu::ChainOptions co;
  co.device_count = o.device_count;
  co.vref = cfg.vref;
  co.seed = o.seed;
  co.noise = o.noise ? emu::NoiseProfile::reference() : emu::NoiseProfile::off();
  emu::DeviceChain chain(co);
  chain.power_on_reset();
  chain.execute_command(emu::opcode::kSdatac);
  for (const auto& w : acq::register_program(cfg)) chain.write_registers(emu::addr(w.first), w.values);
  chain.execute_command(emu::opcode::kRdatac);
  chain.execute_command(emu::opcode::kStart);
  return chain;
}

// Binds the stimulus to every channel and returns per-channel input-referred volts.
std::vector<std::vector<double>> run(emu::DeviceChain& chain, const acq::AcqConfig& cfg, std::size_t frames,
                                     const SignalSource& vp, const SignalSource& vn,
                                     const std::vector<emu::CommonModeLeakage>& leak) {
  const std::size_t C = chain.channel_count();
  for (std::size_t c = 0; c < C; ++c)
    chain.set_channel_inputs(c / emu::kChannelsPerDevice, c % emu::kChannelsPerDevice, {vp, vn, leak[c]});
  std::vector<std::vector<double>> out(C, std::vector<double>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    const auto& f = chain.step_conversion();
    for (std::size_t c = 0; c < C; ++c)
      out[c][i] = acq::translate(f.per_device[c / emu::kChannelsPerDevice].codes[c % emu::kChannelsPerDevice],
                                 cfg.gain, cfg.vref);
  }
  return out;
}

}  // namespace

double CmrrEvalCurve::max_error_db(double f_lo, double f_hi) const {
  double worst = 0;
  for (std::size_t i = 0; i < measured.points.size(); ++i) {
    const auto& p = measured.points[i];
    if (p.frequency_hz < f_lo || p.frequency_hz > f_hi || !std::isfinite(configured_db[i])) continue;
    worst = std::max(worst, std::abs(p.cmrr_db - configured_db[i]));
  }
  return worst;
}

LeakageProfile flat_leakage(double cmrr_db) {
  return [cmrr_db](std::size_t) { return emu::CommonModeLeakage::flat(cmrr_db); };
}

LeakageProfile typical_leakage() {
  return [](std::size_t ch) { return emu::CommonModeLeakage::typical(ch); };
}

std::vector<CmrrEvalCurve> measure_cmrr(const CmrrEvalOptions& o, const LeakageProfile& leakage) {
  if (!(o.duration_s > 0) || o.frequencies_hz.empty())
    throw Error(ErrorCode::InvalidArgument, "CMRR sweep needs a duration and at least one frequency");
  for (double f : o.frequencies_hz) {
    if (f < 0 || f >= o.rate_hz / 2) throw Error(ErrorCode::InvalidArgument, "stimulus frequency outside 0..Nyquist");
  }
  acq::AcqConfig cfg;
  auto chain = make_chain(o, cfg);
  const std::size_t C = chain.channel_count();
  const auto frames = static_cast<std::size_t>(std::llround(o.rate_hz * o.duration_s));
  if (frames < 16) throw Error(ErrorCode::SignalTooShort, "CMRR run shorter than 16 frames");
  const double rate = chain.sample_rate_hz();

  std::vector<emu::CommonModeLeakage> leak(C);
  for (std::size_t c = 0; c < C; ++c) leak[c] = leakage ? leakage(c) : emu::CommonModeLeakage::none();

  std::vector<CmrrEvalCurve> curves(C);
  for (std::size_t c = 0; c < C; ++c) curves[c].measured.channel = c;

  const auto& s = o.stimulus;
  for (double f : o.frequencies_hz) {
    SignalSource d_p, cm;
    double d_in, cm_in;
    if (f == 0) {
      d_p = SignalSource::dc(s.differential_pp_v);
      cm = SignalSource::dc(s.common_mode_bias_v + s.common_mode_pp_v / 2);
      d_in = s.differential_pp_v;
      cm_in = s.common_mode_bias_v + s.common_mode_pp_v / 2;
    } else {
      d_p = SignalSource::sine(f, s.differential_pp_v / 2);
      cm = SignalSource::composite({SignalSource::dc(s.common_mode_bias_v), SignalSource::sine(f, s.common_mode_pp_v / 2)});
      d_in = s.differential_pp_v / 2;
      cm_in = s.common_mode_pp_v / 2;
    }
    const auto diff = run(chain, cfg, frames, d_p, SignalSource::dc(0), leak);
    const auto comm = run(chain, cfg, frames, cm, cm, leak);
    for (std::size_t c = 0; c < C; ++c) {
      const double a_d = metrics::tone_amplitude(diff[c], rate, f) / d_in;
      const double out_cm = metrics::tone_amplitude(comm[c], rate, f);
      metrics::CmrrPoint p;
      p.frequency_hz = f;
      if (out_cm <= metrics::kCmrrFloorRatio * cm_in) {
        p.below_floor = true;
        p.cmrr_db = metrics::cmrr_db(a_d, metrics::kCmrrFloorRatio);
      } else {
        p.cmrr_db = metrics::cmrr_db(a_d, out_cm / cm_in);
      }
      curves[c].measured.points.push_back(p);
      curves[c].configured_db.push_back(leak[c].cmrr_at(f));
    }
  }
  return curves;
}

std::string cmrr_table_text(const std::vector<CmrrEvalCurve>& curves) {
  std::string out = "channel  min_db    at_hz   max_err_db(1-70 Hz)\n";
  char line[128];
  for (const auto& c : curves) {
    const auto& pts = c.measured.points;
    const auto it = std::min_element(pts.begin(), pts.end(),
                                     [](const auto& a, const auto& b) { return a.cmrr_db < b.cmrr_db; });
    if (it == pts.end()) continue;
    const double err = c.max_error_db();
    if (it->below_floor) {
      std::snprintf(line, sizeof line, "%7zu  %s\n", c.measured.channel, metrics::format_floor(*it).c_str());
    } else if (std::isfinite(c.configured_db.front())) {
      std::snprintf(line, sizeof line, "%7zu  %7.2f  %6.1f   %6.3f\n", c.measured.channel, it->cmrr_db, it->frequency_hz, err);
    } else {
      std::snprintf(line, sizeof line, "%7zu  %7.2f  %6.1f   n/a\n", c.measured.channel, it->cmrr_db, it->frequency_hz);
    }
    out += line;
  }
  return out;
}

std::string cmrr_json(const std::vector<CmrrEvalCurve>& curves) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : curves) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < c.measured.points.size(); ++i) {
      const auto& p = c.measured.points[i];
      nlohmann::json j = {{"frequency_hz", p.frequency_hz}, {"cmrr_db", p.cmrr_db}, {"below_floor", p.below_floor}};
      if (p.below_floor) j["display"] = metrics::format_floor(p);
      j["configured_db"] = std::isfinite(c.configured_db[i]) ? nlohmann::json(c.configured_db[i]) : nlohmann::json(nullptr);
      pts.push_back(j);
    }
    arr.push_back({{"channel", c.measured.channel}, {"min_db", c.measured.min_db()}, {"points", pts}});
  }
  return arr.dump(2);
}

std::string cmrr_csv(const std::vector<CmrrEvalCurve>& curves) {
  std::string out = "frequency_hz";
  for (const auto& c : curves) out += ",ch" + std::to_string(c.measured.channel);
  out += '\n';
  if (curves.empty()) return out;
  char cell[32];
  for (std::size_t i = 0; i < curves.front().measured.points.size(); ++i) {
    std::snprintf(cell, sizeof cell, "%g", curves.front().measured.points[i].frequency_hz);
    out += cell;
    for (const auto& c : curves) {
      std::snprintf(cell, sizeof cell, ",%.4f", c.measured.points[i].cmrr_db);
      out += cell;
    }
    out += '\n';
  }
  return out;
}

}  // namespace beats::eval
