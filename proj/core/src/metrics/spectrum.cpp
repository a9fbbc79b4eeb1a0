#include "beats/metrics/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "beats/common/error.hpp"

namespace beats::metrics {

namespace {

// FFTW's planner is not reentrant; execution on distinct arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() noexcept { return in_; }
  void execute() noexcept { fftw_execute(plan_); }
  [[nodiscard]] double power(std::size_t k) const noexcept { return out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1]; }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  // periodic form: exact 50% overlap-add
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// Adds the one-sided PSD of one windowed segment into acc.
void accumulate_segment(RealFft& fft, std::span<const double> seg, const std::vector<double>& w, double mean,
                        double scale, std::vector<double>& acc) {
  const std::size_t n = seg.size();
  double* in = fft.input();
  for (std::size_t i = 0; i < n; ++i) in[i] = (seg[i] - mean) * w[i];
  fft.execute();
  const std::size_t bins = n / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) {
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    acc[k] += fft.power(k) * scale * (edge ? 1.0 : 2.0);
  }
}

double mean_of(std::span<const double> x) {
  double m = 0.0;
  for (const double v : x) m += v;
  return x.empty() ? 0.0 : m / static_cast<double>(x.size());
}

}  // namespace

std::size_t Psd::peak_bin(std::size_t from) const {
  std::size_t best = from;
  for (std::size_t k = from; k < power.size(); ++k)
    if (power[k] > power[best]) best = k;
  return best;
}

Psd periodogram(std::span<const double> x, double rate_hz) {
  if (x.size() < 2) throw Error(ErrorCode::SignalTooShort, "periodogram needs at least two samples");
  const std::size_t n = x.size();
  const auto w = hann(n);
  double w2 = 0.0;
  for (const double v : w) w2 += v * v;
  Psd psd;
  psd.df = rate_hz / static_cast<double>(n);
  psd.power.assign(n / 2 + 1, 0.0);
  RealFft fft(n);
  accumulate_segment(fft, x, w, mean_of(x), 1.0 / (rate_hz * w2), psd.power);
  return psd;
}

Psd welch_psd(std::span<const double> x, double rate_hz, double segment_s) {
  const auto seg = static_cast<std::size_t>(std::llround(segment_s * rate_hz));
  if (seg < 2 || x.size() < seg)
    throw Error(ErrorCode::SignalTooShort, "Welch estimate needs at least one full segment");
  const std::size_t hop = seg / 2;
  const auto w = hann(seg);
  double w2 = 0.0;
  for (const double v : w) w2 += v * v;

  Psd psd;
  psd.df = rate_hz / static_cast<double>(seg);
  psd.power.assign(seg / 2 + 1, 0.0);
  RealFft fft(seg);
  std::size_t count = 0;
  for (std::size_t start = 0; start + seg <= x.size(); start += hop) {
    const auto s = x.subspan(start, seg);
    accumulate_segment(fft, s, w, mean_of(s), 1.0 / (rate_hz * w2), psd.power);
    ++count;
  }
  for (double& p : psd.power) p /= static_cast<double>(count);
  return psd;
}

double integrate_band(const Psd& psd, double lo_hz, double hi_hz) {
  double sum = 0.0;
  for (std::size_t k = 0; k < psd.power.size(); ++k) {
    const double f = psd.frequency(k);
    if (f >= lo_hz && f < hi_hz) sum += psd.power[k];
  }
  return sum * psd.df;
}

double BandPower::get(std::size_t band) const noexcept {
  switch (band) {
    case 0: return delta;
    case 1: return theta;
    case 2: return alpha;
    case 3: return beta;
    case 4: return gamma;
    default: return 0.0;
  }
}

double BandPower::fraction(std::size_t band) const noexcept {
  const double t = total();
  return t > 0.0 ? get(band) / t : 0.0;
}

BandPower band_power(std::span<const double> x, double rate_hz) {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be positive");
  if (static_cast<double>(x.size()) < 2.0 * rate_hz)
    throw Error(ErrorCode::SignalTooShort, "band power needs at least 2 s of signal");
  const Psd psd = welch_psd(x, rate_hz, 2.0);
  BandPower bp;
  double* out[5] = {&bp.delta, &bp.theta, &bp.alpha, &bp.beta, &bp.gamma};
  for (std::size_t b = 0; b < kEegBands.size(); ++b)
    *out[b] = integrate_band(psd, kEegBands[b].lo_hz, kEegBands[b].hi_hz) * 1e12;
  return bp;
}

}  // namespace beats::metrics
