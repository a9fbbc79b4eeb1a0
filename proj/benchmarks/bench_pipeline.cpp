#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "beats/acq/sample_fifo.hpp"
#include "beats/acq/translate.hpp"
#include "beats/emu/device_chain.hpp"
#include "beats/metrics/spectrum.hpp"

using namespace beats;

namespace {

void BM_StepConversion(benchmark::State& state) {
  emu::ChainOptions o;
  o.device_count = static_cast<std::size_t>(state.range(0));
  emu::DeviceChain chain(o);
  chain.execute_command(emu::opcode::kSdatac);
  const std::vector<std::uint8_t> ch(8, 0x60);
  chain.write_registers(emu::addr(emu::Reg::Ch1Set), ch);
  chain.execute_command(emu::opcode::kRdatac);
  chain.execute_command(emu::opcode::kStart);
  for (auto _ : state) benchmark::DoNotOptimize(chain.step_conversion().t_conv_us);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepConversion)->Arg(1)->Arg(4);

void BM_Translate(benchmark::State& state) {
  std::int32_t code = -8'000'000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(acq::translate(code, 24, 4.5));
    code += 7919;
  }
}
BENCHMARK(BM_Translate);

// One 4-device record (timestamp, status, 32 channels) through the FIFO, single thread.
void BM_FifoPushPop(benchmark::State& state) {
  constexpr std::size_t kRecord = 8 + 4 * 4 + 32 * 8;
  acq::SampleFifo fifo(4096, kRecord);
  std::vector<std::uint8_t> in(kRecord, 0x5A), out(kRecord * 8);
  for (auto _ : state) {
    fifo.push(in);
    benchmark::DoNotOptimize(fifo.pop(out, 8));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FifoPushPop);

void BM_BandPower(benchmark::State& state) {
  const double rate = 4000;
  std::vector<double> x(static_cast<std::size_t>(rate * static_cast<double>(state.range(0))));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1e-5 * std::sin(2 * M_PI * 10 * static_cast<double>(i) / rate);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::band_power(x, rate));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_BandPower)->Arg(4)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
