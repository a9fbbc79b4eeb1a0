#include "beats/eval/loopback.hpp"

#include <optional>

#include "beats/acq/tap.hpp"
#include "beats/common/error.hpp"

namespace beats::eval {

LoopbackResult run_loopback(LoopbackOptions o) {
  auto& rc = o.recorder;
  rc.listen = {o.run.acq.server.host, 0};
  rc.rate_hz = o.run.acq.rate_hz;
  rc.gain = o.run.acq.gain;
  rc.vref = o.run.acq.vref;
  rc.packet_samples = o.run.acq.packet_samples;

  recorder::Recorder rec(rc);
  rec.listen();
  o.run.acq.server.port = rec.port();
  if (o.on_recorder) o.on_recorder(rec);

  acq::TcpSink tcp(o.run.acq.server);
  acq::PacketSink* sink = &tcp;
  std::optional<acq::DroppingSink> dropping;
  if (!o.drop_seqs.empty()) sink = &dropping.emplace(*sink, o.drop_seqs);
  std::optional<acq::TapSink> tap;
  if (!o.tap_path.empty()) sink = &tap.emplace(*sink, o.tap_path);

  LoopbackResult out;
  try {
    out.engine = acq::run_emulated(o.run, *sink, o.limits, o.setup);
  } catch (...) {
    try {
      rec.stop();
    } catch (...) {
    }
    throw;
  }
  auto fin = rec.wait(o.finalize_timeout);
  if (!fin) {
    const auto why = rec.receive_error();
    throw Error(ErrorCode::InvalidState, "recorder did not finalize" + (why.empty() ? std::string() : ": " + why));
  }
  out.session = std::move(*fin);
  out.report = delay_loss_report(out.engine, out.session.header);
  return out;
}

}  // namespace beats::eval
