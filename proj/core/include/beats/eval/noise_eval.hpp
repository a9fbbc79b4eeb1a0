#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "beats/metrics/noise.hpp"

namespace beats::eval {

/// Reference column of the input-short noise table (V_RMS, V_PP in uV).
struct NoiseReference {
  double rate_hz;
  double v_rms_uv;
  double v_pp_uv;
  double enob;
  double dynamic_range_db;
};

inline constexpr std::array<NoiseReference, 5> kNoiseReference{{
    {250, 0.14, 0.98, 19.85, 119.5},
    {500, 0.20, 1.39, 19.35, 116.5},
    {1000, 0.28, 1.97, 18.85, 113.5},
    {2000, 0.40, 2.79, 18.35, 110.4},
    {4000, 0.56, 3.94, 17.84, 107.4},
}};

struct NoiseEvalOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  std::size_t channel = 0;
  std::size_t device_count = 4;
};

struct NoiseEvalRow {
  NoiseReference reference;
  metrics::NoiseStats measured;
  std::size_t channel = 0;
  std::uint64_t samples = 0;
};

/// Runs the emulated chain through the acquisition engine in input-short
/// mode (virtual clock) and measures the noise of one channel.
NoiseEvalRow eval_noise(double rate_hz, const NoiseEvalOptions& options = {});
std::vector<NoiseEvalRow> eval_noise_table(const NoiseEvalOptions& options = {});

std::string noise_table_text(const std::vector<NoiseEvalRow>& rows);
std::string noise_table_json(const std::vector<NoiseEvalRow>& rows);

}  // namespace beats::eval
