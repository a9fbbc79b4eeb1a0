#include <benchmark/benchmark.h>

#include <cmath>

#include "beats/wire/codec.hpp"

using namespace beats;

namespace {

wire::DataPacket full_packet() {
  wire::DataPacket p;
  p.session_id = "bench";
  p.device_count = 4;
  p.channel_count = 32;
  for (std::size_t i = 0; i < 160; ++i) {
    p.t.push_back(1'700'000'000'000'000 + static_cast<UtcMicros>(250 * i));
    for (int d = 0; d < 4; ++d) p.status.push_back(0xC00000);
    for (std::size_t c = 0; c < 32; ++c) p.volts.push_back(3e-6 * std::sin(0.013 * static_cast<double>(i * 31 + c)));
  }
  return p;
}

void BM_EncodePacket(benchmark::State& state) {
  const auto p = full_packet();
  std::vector<std::uint8_t> out;
  for (auto _ : state) {
    out.clear();
    wire::encode_packet_into(p, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 160);
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * out.size()));
}
BENCHMARK(BM_EncodePacket);

void BM_DecodePayload(benchmark::State& state) {
  const auto payload = wire::encode_payload(full_packet());
  for (auto _ : state) benchmark::DoNotOptimize(wire::decode_payload(payload));
  state.SetItemsProcessed(state.iterations() * 160);
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * payload.size()));
}
BENCHMARK(BM_DecodePayload);

// Stream of 16 frames fed in chunks of the given size.
void BM_StreamDecoder(benchmark::State& state) {
  std::vector<std::uint8_t> stream;
  auto p = full_packet();
  for (int i = 0; i < 16; ++i) {
    p.seq = static_cast<std::uint64_t>(i);
    wire::encode_packet_into(p, stream);
  }
  const auto chunk = static_cast<std::size_t>(state.range(0));
  std::vector<wire::DataPacket> out;
  for (auto _ : state) {
    wire::StreamDecoder dec;
    out.clear();
    for (std::size_t pos = 0; pos < stream.size(); pos += chunk)
      dec.feed(std::span(stream).subspan(pos, std::min(chunk, stream.size() - pos)), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * stream.size()));
}
BENCHMARK(BM_StreamDecoder)->Arg(1460)->Arg(65536);

}  // namespace
