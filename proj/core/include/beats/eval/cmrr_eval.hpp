#pragma once

#include <functional>
#include <string>
#include <vector>

#include "beats/emu/device_chain.hpp"
#include "beats/metrics/cmrr.hpp"

namespace beats::eval {

/// Bench stimuli, peak-to-peak: 100 uV differential sine and a 4.4 V
/// common-mode sine riding on 2.5 V. At 0 Hz both are DC levels.
struct CmrrStimulus {
  double differential_pp_v = 100e-6;
  double common_mode_pp_v = 4.4;
  double common_mode_bias_v = 2.5;
};

struct CmrrEvalOptions {
  double rate_hz = 1000;
  double duration_s = 2.0;
  std::vector<double> frequencies_hz{0, 1, 2, 3, 5, 7, 10, 15, 20, 25, 30, 40, 50, 60, 70};
  std::size_t device_count = 4;
  std::uint64_t seed = 1;
  bool noise = true;
  CmrrStimulus stimulus;
};

using LeakageProfile = std::function<emu::CommonModeLeakage(std::size_t channel)>;

struct CmrrEvalCurve {
  metrics::CmrrCurve measured;
  std::vector<double> configured_db;  // ground truth per point, +inf without leakage
  /// Largest |measured - configured| over points with 1 <= f <= 70 Hz and finite ground truth.
  [[nodiscard]] double max_error_db(double f_lo = 1.0, double f_hi = 70.0) const;
};

/// Drives every channel of an emulated chain (SRB1 off, normal inputs) with
/// the differential and then the common-mode stimulus per frequency and
/// applies 20 log10(A_d / A_cm) to single-bin DFT amplitudes.
std::vector<CmrrEvalCurve> measure_cmrr(const CmrrEvalOptions& options, const LeakageProfile& leakage);

LeakageProfile flat_leakage(double cmrr_db);
LeakageProfile typical_leakage();

std::string cmrr_table_text(const std::vector<CmrrEvalCurve>& curves);
std::string cmrr_json(const std::vector<CmrrEvalCurve>& curves);
/// One row per frequency, one column per channel.
std::string cmrr_csv(const std::vector<CmrrEvalCurve>& curves);

}  // namespace beats::eval
