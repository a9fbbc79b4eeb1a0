#include "beats/sim/soak.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/geometric_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/uniform_01.hpp>

#include "beats/acq/sample_record.hpp"
#include "beats/common/error.hpp"
#include "beats/recorder/sequence.hpp"

namespace beats::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}
  double exp(double mean) { return mean > 0 ? mean * exp_(gen_) : 0.0; }
  double uniform() { return u01_(gen_); }
  bool chance(double p) { return p > 0 && uniform() < p; }
  double stall(double p, double max_us) { return chance(p) ? uniform() * max_us : 0.0; }
  std::uint64_t gap(double p) {
    if (p <= 0) return std::numeric_limits<std::uint64_t>::max();
    boost::random::geometric_distribution<std::uint64_t> g(p);
    return g(gen_);
  }

 private:
  boost::random::mt19937 gen_;
  boost::random::exponential_distribution<double> exp_{1.0};
  boost::random::uniform_01<double> u01_;
};

struct Slot {
  enum class State { Free, Filling, Ready, Consuming };
  State state = State::Free;
  std::size_t count = 0;
  std::uint64_t first = 0;
};

struct Range {
  std::uint64_t first;
  std::size_t n;
};

class Soak {
 public:
  explicit Soak(const SoakConfig& c)
      : cfg_(c),
        m_(c.model),
        rng_(c.seed),
        period_us_(1e6 / c.acq.rate_hz / (1.0 + c.clock_ppm * 1e-6)),
        fetch_us_(c.acq.modeled_fetch_us()),
        cap_(c.acq.ping_pong_capacity),
        P_(c.acq.packet_samples),
        fifo_cap_(c.acq.fifo_capacity / acq::RecordLayout{c.acq.device_count, c.acq.channel_count()}.size()),
        seq_(c.acq.packet_samples),
        rx_start_(std::max<std::size_t>(c.model.socket_buffer_packets, 1), -kInf),
        storage_pop_(std::max<std::size_t>(c.storage_queue_packets, 1), -kInf) {
    if (fifo_cap_ == 0) throw Error(ErrorCode::InvalidConfig, "FIFO smaller than one record");
    const std::size_t per_seg = recorder::samples_per_segment(c.acq.rate_hz);
    segments_per_packet_ = (P_ + per_seg - 1) / per_seg;
    epoch_ = c.acq.virtual_epoch_us;
    r_.adc_delay.reset(epoch_);
    r_.trans_delay.reset(epoch_);
    save_.reset(epoch_);
    plot_.reset(epoch_);
    slots_[0].state = Slot::State::Filling;
    next_flush_us_ = m_.flush_interval_s * 1e6;
  }

  SoakResult run(const std::function<void(double)>& progress) {
    const auto wall0 = std::chrono::steady_clock::now();
    const double horizon = cfg_.hours * 3.6e9;
    const auto frames = static_cast<std::uint64_t>(std::floor(horizon / period_us_));
    std::uint64_t next_stall = rng_.gap(m_.handler_stall_per_frame);
    std::uint64_t next_report = static_cast<std::uint64_t>(3.6e9 / period_us_);
    double c_prev = -kInf;
    std::uint64_t k = 0;
    auto completion = [&](std::uint64_t i) {
      double lat = m_.handler_latency_us + rng_.exp(m_.handler_latency_mean_us);
      if (next_stall == 0) {
        lat += rng_.uniform() * m_.handler_stall_max_us;
        next_stall = rng_.gap(m_.handler_stall_per_frame);
      } else if (next_stall != std::numeric_limits<std::uint64_t>::max()) {
        --next_stall;
      }
      return std::max(tk(i) + lat, c_prev) + fetch_us_;
    };
    double next_c = frames ? completion(0) : kInf;

    for (;;) {
      const double tH = k < frames ? next_c : kInf;
      const double tF = fstate_ == F::Formatting ? f_done_ : kInf;
      const double tK = kstate_ == K::Sending ? k_done_ : kInf;
      const double t = std::min({tH, tF, tK});
      if (t == kInf) break;
      if (t == tH) {
        if (next_c > tk(k) + period_us_) ++r_.overruns;
        if (append(k)) pump(t);
        c_prev = next_c;
        ++k;
        if (k == frames) {
          closed_ = true;
          pump(t);
        } else {
          next_c = completion(k);
        }
        if (progress && k == next_report) {
          progress(static_cast<double>(k) * period_us_ / 3.6e9);
          next_report += static_cast<std::uint64_t>(3.6e9 / period_us_);
        }
      } else if (t == tF) {
        fstate_ = F::Pushing;
        f_next_ = slots_[f_slot_].first;
        f_remaining_ = slots_[f_slot_].count;
        pump(t);
      } else {
        kstate_ = K::Collecting;
        pump(t);
      }
    }

    SoakResult out;
    auto& e = r_;
    e.session_id = "soak";
    e.device_count = cfg_.acq.device_count;
    e.channel_count = cfg_.acq.channel_count();
    e.rate_hz = cfg_.acq.rate_hz;
    e.clock = "virtual";
    e.configure_attempts = 1;
    e.frames_fetched = frames;
    e.samples_formatted = fifo_.pushed;
    e.samples_sent = e.packets_sent * P_;
    e.in_flight = frames - e.samples_sent - pp_.dropped;
    e.pingpong_drops = pp_.dropped;
    e.mp_loss_packets = (pp_.dropped + P_ - 1) / P_;
    e.fifo = fifo_;
    e.pingpong = pp_;
    e.delays_measured = true;
    e.first_sample_us = frames ? epoch_ : 0;
    e.last_sample_us = frames ? epoch_ + static_cast<UtcMicros>(std::llround(tk(frames - 1))) : 0;
    e.stop_reason = "soak horizon";

    auto& h = out.session;
    h.session_id = e.session_id;
    h.device_count = e.device_count;
    h.channel_count = e.channel_count;
    h.rate_hz = e.rate_hz;
    h.gain = cfg_.acq.gain;
    h.vref = cfg_.acq.vref;
    h.packet_samples = P_;
    h.samples_per_segment = recorder::samples_per_segment(e.rate_hz);
    h.sample_count = samples_stored_;
    h.packets_received = seq_.packets();
    h.seq_gaps = seq_.missing_packets();
    h.stale_packets = seq_.stale_packets();
    h.holes = seq_.holes();
    h.sample_count_verified = samples_stored_ == seq_.samples() && seq_.packets() == e.packets_sent;
    h.save_delay = {save_.max_s(), save_.mean_s(), save_.count(), save_.hourly_max()};
    h.plot_delay = {plot_.max_s(), plot_.mean_s(), plot_.count(), plot_.hourly_max()};

    out.engine = e;
    out.report = eval::delay_loss_report(e, h);
    out.samples_received = seq_.samples();
    out.samples_stored = samples_stored_;
    out.storage_blocked = storage_blocked_;
    out.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    out.engine.elapsed_s = out.wall_s;
    return out;
  }

 private:
  enum class F { Idle, Formatting, Pushing };
  enum class K { Collecting, Sending };

  double tk(std::uint64_t i) const { return static_cast<double>(i) * period_us_; }
  UtcMicros at(double t_us) const { return epoch_ + static_cast<UtcMicros>(t_us); }

  // Ping-pong append from the DRDY handler. Returns true when a half changed hands.
  bool append(std::uint64_t k) {
    Slot& a = slots_[active_];
    if (a.state != Slot::State::Filling || a.count >= cap_) {
      ++pp_.dropped;
      return false;
    }
    if (a.count == 0) a.first = k;
    ++a.count;
    ++pp_.appended;
    return a.count == cap_ && try_swap();
  }

  bool try_swap() {
    const int other = 1 - active_;
    if (slots_[other].state != Slot::State::Free) return false;
    slots_[active_].state = Slot::State::Ready;
    ++pp_.handoffs;
    active_ = other;
    slots_[other] = {Slot::State::Filling, 0, 0};
    return true;
  }

  void start_format(double t, int slot) {
    slots_[slot].state = Slot::State::Consuming;
    f_slot_ = slot;
    fstate_ = F::Formatting;
    f_done_ = t + m_.format_per_frame_us * static_cast<double>(slots_[slot].count) + rng_.exp(m_.format_mean_us) +
              rng_.stall(m_.format_stall_per_half, m_.format_stall_max_us);
  }

  void pump(double t) {
    for (bool progress = true; progress;) {
      progress = false;
      if (fstate_ == F::Idle) {
        for (int s = 0; s < 2; ++s) {
          if (slots_[s].state == Slot::State::Ready) {
            start_format(t, s);
            progress = true;
            break;
          }
        }
        if (!progress && closed_ && slots_[active_].state == Slot::State::Filling && slots_[active_].count > 0) {
          ++pp_.partial_flushes;
          start_format(t, active_);
          progress = true;
        }
      }
      if (kstate_ == K::Collecting && fifo_count_ > 0) {
        std::size_t want = std::min(fifo_count_, P_ - k_count_);
        while (want > 0) {
          Range& r = fifo_ranges_.front();
          const std::size_t n = std::min(want, r.n);
          if (k_count_ == 0) k_first_ = r.first;
          k_last_ = r.first + n - 1;
          r.first += n;
          r.n -= n;
          if (r.n == 0) fifo_ranges_.pop_front();
          k_count_ += n;
          fifo_count_ -= n;
          fifo_.popped += n;
          want -= n;
        }
        if (k_count_ == P_) send(t);
        progress = true;
      }
      if (fstate_ == F::Pushing && f_remaining_ > 0) {
        if (fifo_count_ < fifo_cap_) {
          if (blocked_since_ >= 0) {
            const double stalled = (t - blocked_since_) * 1e-6;
            fifo_.longest_stall_s = std::max(fifo_.longest_stall_s, stalled);
            if (stalled > 1.0) ++fifo_.sustained_stalls;
            blocked_since_ = -1;
          }
          const std::size_t n = std::min(fifo_cap_ - fifo_count_, f_remaining_);
          r_.adc_delay.record(at(tk(f_next_)), (t - tk(f_next_)) * 1e-6);
          if (!fifo_ranges_.empty() && fifo_ranges_.back().first + fifo_ranges_.back().n == f_next_)
            fifo_ranges_.back().n += n;
          else
            fifo_ranges_.push_back({f_next_, n});
          fifo_count_ += n;
          fifo_.pushed += n;
          fifo_.high_water = std::max(fifo_.high_water, fifo_count_);
          f_next_ += n;
          f_remaining_ -= n;
          progress = true;
        } else if (blocked_since_ < 0) {
          ++fifo_.blocked_pushes;
          blocked_since_ = t;
        }
      }
      if (fstate_ == F::Pushing && f_remaining_ == 0) {
        slots_[f_slot_] = {};
        fstate_ = F::Idle;
        if (slots_[active_].state == Slot::State::Filling && slots_[active_].count == cap_) try_swap();
        progress = true;
      }
    }
  }

  void send(double t) {
    const std::uint64_t seq = r_.packets_sent++;
    const double samples = static_cast<double>(P_);
    double done = t + m_.encode_per_sample_us * samples + rng_.exp(m_.encode_mean_us) +
                  samples * m_.bytes_per_sample / m_.wire_bytes_per_us +
                  rng_.stall(m_.packager_stall_per_packet, m_.packager_stall_max_us);
    // the write completes once the recorder has drained enough of the socket buffer
    done = std::max(done, rx_start_[seq % rx_start_.size()]);
    kstate_ = K::Sending;
    k_done_ = done;
    k_count_ = 0;
    const double t_first = tk(k_first_);
    r_.trans_delay.record(at(t_first), (done - t_first) * 1e-6);
    receive(seq, done + m_.network_latency_us, t_first, tk(k_last_));
  }

  // Recorder side of one packet: receive context, storage worker, plot timer.
  void receive(std::uint64_t seq, double arrival, double t_first, double t_last) {
    const double rx_start = std::max(arrival, rx_done_);
    rx_start_[seq % rx_start_.size()] = rx_start;
    double pushed = rx_start + m_.decode_per_sample_us * static_cast<double>(P_) + rng_.exp(m_.decode_mean_us);
    const double space = storage_pop_[seq % storage_pop_.size()];
    if (space > pushed) {
      ++storage_blocked_;
      pushed = space;
    }
    rx_done_ = pushed;
    seq_.observe(seq, at(t_first), at(t_last), P_);

    const double pop = std::max(pushed, storage_busy_);
    storage_pop_[seq % storage_pop_.size()] = pop;
    double work = m_.segment_write_us * static_cast<double>(segments_per_packet_);
    if (pop >= next_flush_us_) {
      work += m_.flush_stall_min_us + rng_.uniform() * (m_.flush_stall_max_us - m_.flush_stall_min_us);
      while (next_flush_us_ <= pop) next_flush_us_ += m_.flush_interval_s * 1e6;
    }
    storage_busy_ = pop + work;
    // the first segment of the packet holds its oldest sample
    save_.record(at(t_first), (pop + work - t_first) * 1e-6);
    samples_stored_ += P_;

    const double tick = std::ceil(pushed / m_.plot_period_us) * m_.plot_period_us + rng_.exp(m_.plot_jitter_mean_us) +
                        rng_.stall(m_.plot_stall_per_packet, m_.plot_stall_max_us);
    plot_.record(at(t_first), (tick - t_first) * 1e-6);
  }

  SoakConfig cfg_;
  ServiceModel m_;
  Rng rng_;
  double period_us_, fetch_us_;
  std::size_t cap_, P_, fifo_cap_;
  std::size_t segments_per_packet_ = 1;
  UtcMicros epoch_ = 0;

  acq::SessionReport r_;
  acq::FifoStats fifo_;
  acq::PingPongStats pp_;

  std::array<Slot, 2> slots_;
  int active_ = 0;
  bool closed_ = false;

  F fstate_ = F::Idle;
  int f_slot_ = 0;
  double f_done_ = 0;
  std::uint64_t f_next_ = 0;
  std::size_t f_remaining_ = 0;
  double blocked_since_ = -1;

  std::deque<Range> fifo_ranges_;
  std::size_t fifo_count_ = 0;

  K kstate_ = K::Collecting;
  std::size_t k_count_ = 0;
  std::uint64_t k_first_ = 0, k_last_ = 0;
  double k_done_ = 0;

  recorder::SequenceTracker seq_;
  std::vector<double> rx_start_;
  std::vector<double> storage_pop_;
  double rx_done_ = -kInf;
  double storage_busy_ = -kInf;
  double next_flush_us_ = 0;
  std::uint64_t storage_blocked_ = 0;
  std::uint64_t samples_stored_ = 0;
  DelayTracker save_, plot_;
};

}  // namespace

SoakResult run_soak(const SoakConfig& config, const std::function<void(double)>& progress) {
  if (!(config.hours > 0)) throw Error(ErrorCode::InvalidConfig, "soak needs a positive duration");
  acq::validate(config.acq);
  Soak soak(config);
  return soak.run(progress);
}

}  // namespace beats::sim
