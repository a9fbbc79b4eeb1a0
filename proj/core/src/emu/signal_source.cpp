#include "beats/emu/signal_source.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "beats/common/error.hpp"

namespace beats::emu {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_open(std::uint64_t bits) noexcept {
  // (0, 1): never 0 so the log below is finite
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based Gaussian so that white noise is a function of frame index.
double hashed_gaussian(std::uint64_t seed, std::uint64_t frame) noexcept {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(frame));
  const std::uint64_t b = splitmix64(a);
  return std::sqrt(-2.0 * std::log(unit_open(a))) * std::cos(kTwoPi * unit_open(b));
}

double burst_envelope(double t_s, double period, double duty) noexcept {
  if (period <= 0.0) return 1.0;
  const double on = period * std::clamp(duty, 0.0, 1.0);
  const double ramp = std::min(0.1, on / 4.0);
  const double pos = std::fmod(t_s, period);
  if (pos >= on) return 0.0;
  if (ramp <= 0.0) return 1.0;
  if (pos < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * pos / ramp);
  if (pos > on - ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * (on - pos) / ramp);
  return 1.0;
}

double parse_number(std::string_view s) {
  // from_chars for double is available in libstdc++ 11
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw Error(ErrorCode::InvalidArgument, "bad number in signal source: '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

SignalSource parse_term(std::string_view term) {
  const auto f = split(term, ':');
  const auto kind = f[0];
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (f.size() - 1 < lo || f.size() - 1 > hi)
      throw Error(ErrorCode::InvalidArgument,
                  "wrong argument count for signal source '" + std::string(term) + "'");
  };
  if (kind == "dc") {
    need(1, 1);
    return SignalSource::dc(parse_number(f[1]));
  }
  if (kind == "sine") {
    need(2, 3);
    return SignalSource::sine(parse_number(f[1]), parse_number(f[2]),
                              f.size() > 3 ? parse_number(f[3]) : 0.0);
  }
  if (kind == "square") {
    need(2, 2);
    return SignalSource::square(parse_number(f[1]), parse_number(f[2]));
  }
  if (kind == "alpha") {
    need(2, 4);
    return SignalSource::alpha_burst(parse_number(f[1]), parse_number(f[2]),
                                     f.size() > 3 ? parse_number(f[3]) : 4.0,
                                     f.size() > 4 ? parse_number(f[4]) : 0.5);
  }
  if (kind == "noise") {
    need(1, 2);
    return SignalSource::white_noise(
        parse_number(f[1]), f.size() > 2 ? static_cast<std::uint64_t>(parse_number(f[2])) : 1);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown signal source kind '" + std::string(kind) + "'");
}

}  // namespace

SignalSource SignalSource::dc(double level) {
  SignalSource s;
  s.kind = SourceKind::Dc;
  s.amplitude = level;
  return s;
}

SignalSource SignalSource::sine(double frequency_hz, double amplitude_v, double phase_rad) {
  SignalSource s;
  s.kind = SourceKind::Sine;
  s.frequency = frequency_hz;
  s.amplitude = amplitude_v;
  s.phase = phase_rad;
  return s;
}

SignalSource SignalSource::square(double frequency_hz, double amplitude_v) {
  SignalSource s;
  s.kind = SourceKind::Square;
  s.frequency = frequency_hz;
  s.amplitude = amplitude_v;
  return s;
}

SignalSource SignalSource::alpha_burst(double frequency_hz, double amplitude_v, double period_s,
                                       double duty) {
  SignalSource s;
  s.kind = SourceKind::AlphaBurst;
  s.frequency = frequency_hz;
  s.amplitude = amplitude_v;
  s.burst_period_s = period_s;
  s.burst_duty = duty;
  return s;
}

SignalSource SignalSource::white_noise(double rms_v, std::uint64_t seed) {
  SignalSource s;
  s.kind = SourceKind::WhiteNoise;
  s.rms = rms_v;
  s.seed = seed;
  return s;
}

SignalSource SignalSource::composite(std::vector<SignalSource> parts) {
  SignalSource s;
  s.kind = SourceKind::Composite;
  s.parts = std::move(parts);
  return s;
}

double SignalSource::value(double t_s, std::uint64_t frame_index) const noexcept {
  switch (kind) {
    case SourceKind::Dc:
      return amplitude;
    case SourceKind::Sine:
      return amplitude * std::sin(kTwoPi * frequency * t_s + phase);
    case SourceKind::Square: {
      // +A over the first half period, -A over the second
      const double cycles = frequency * t_s;
      const double frac = cycles - std::floor(cycles);
      return frac < 0.5 ? amplitude : -amplitude;
    }
    case SourceKind::AlphaBurst:
      return amplitude * burst_envelope(t_s, burst_period_s, burst_duty) *
             std::sin(kTwoPi * frequency * t_s + phase);
    case SourceKind::WhiteNoise:
      return rms * hashed_gaussian(seed, frame_index);
    case SourceKind::Composite: {
      double sum = 0.0;
      for (const auto& p : parts) sum += p.value(t_s, frame_index);
      return sum;
    }
  }
  return 0.0;
}

bool SignalSource::is_zero() const noexcept {
  switch (kind) {
    case SourceKind::Dc:
    case SourceKind::Sine:
    case SourceKind::Square:
    case SourceKind::AlphaBurst:
      return amplitude == 0.0;
    case SourceKind::WhiteNoise:
      return rms == 0.0;
    case SourceKind::Composite:
      return std::all_of(parts.begin(), parts.end(), [](const auto& p) { return p.is_zero(); });
  }
  return false;
}

double SignalSource::peak_bound() const noexcept {
  switch (kind) {
    case SourceKind::WhiteNoise:
      return 6.0 * std::abs(rms);
    case SourceKind::Composite: {
      double sum = 0.0;
      for (const auto& p : parts) sum += p.peak_bound();
      return sum;
    }
    default:
      return std::abs(amplitude);
  }
}

SignalSource parse_signal_source(std::string_view text) {
  const auto terms = split(text, '+');
  // '+' inside exponents ("1e+3") would split a number; rejoin such fragments
  std::vector<std::string> joined;
  for (auto t : terms) {
    if (!joined.empty() && !joined.back().empty() &&
        (joined.back().back() == 'e' || joined.back().back() == 'E')) {
      joined.back() += "+";
      joined.back() += t;
    } else {
      joined.emplace_back(t);
    }
  }
  if (joined.size() == 1) return parse_term(joined.front());
  std::vector<SignalSource> parts;
  parts.reserve(joined.size());
  for (const auto& t : joined) parts.push_back(parse_term(t));
  return SignalSource::composite(std::move(parts));
}

std::string describe(const SignalSource& s) {
  std::ostringstream os;
  switch (s.kind) {
    case SourceKind::Dc: os << "dc:" << s.amplitude; break;
    case SourceKind::Sine: os << "sine:" << s.frequency << ':' << s.amplitude; break;
    case SourceKind::Square: os << "square:" << s.frequency << ':' << s.amplitude; break;
    case SourceKind::AlphaBurst:
      os << "alpha:" << s.frequency << ':' << s.amplitude << ':' << s.burst_period_s << ':'
         << s.burst_duty;
      break;
    case SourceKind::WhiteNoise: os << "noise:" << s.rms << ':' << s.seed; break;
    case SourceKind::Composite:
      for (std::size_t i = 0; i < s.parts.size(); ++i) {
        if (i) os << '+';
        os << describe(s.parts[i]);
      }
      break;
  }
  return os.str();
}

}  // namespace beats::emu
