#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beats/common/time.hpp"
#include "beats/recorder/sequence.hpp"
#include "beats/recorder/stimulus.hpp"

namespace beats::recorder {

inline constexpr std::uint32_t kSessionFileVersion = 1;

struct DelaySummary {
  double max_s = 0;
  double mean_s = 0;
  std::uint64_t count = 0;
  std::vector<double> hourly_max_s;
};

/// Segment that could not be read back at finalize time.
struct MissingSegment {
  std::uint64_t segment = 0;
  std::uint64_t samples = 0;
  std::uint64_t sample_index = 0;  // where the segment would start in this file
  UtcMicros t_first = 0;
  UtcMicros t_last = 0;
};

struct SessionHeader {
  std::string session_id;
  std::size_t device_count = 0;
  std::size_t channel_count = 0;
  double rate_hz = 0;
  int gain = 0;
  double vref = 0;
  std::size_t packet_samples = 0;
  std::size_t samples_per_segment = 0;

  std::uint64_t sample_count = 0;
  std::uint64_t packets_received = 0;
  std::uint64_t seq_gaps = 0;  // missing packets
  std::uint64_t stale_packets = 0;
  std::uint64_t samples_unsaved = 0;  // received while saving was off or after StorageFull
  bool sample_count_verified = false;

  std::vector<Hole> holes;
  std::vector<MissingSegment> missing_segments;
  std::vector<StimulusEvent> events;
  std::vector<AlignedAnnotation> annotations;
  std::vector<std::string> alarms;
  std::string protocol_error;
  DelaySummary save_delay;
  DelaySummary plot_delay;

  [[nodiscard]] std::string to_json() const;
  static SessionHeader from_json(std::string_view text);
};

/// Produces the sample stream in order, row-major, a chunk at a time;
/// returns the number of samples written into the vectors (0 = end).
using RowSource = std::function<std::size_t(std::vector<std::uint32_t>& status, std::vector<double>& volts)>;

/// Layout:
///   "BEATSSES" | u32 version | u32 header_len | header JSON (space padded to 8 bytes)
///   | i64 t[N] | u32 status[N][devices] | f64 volts[channels][N] | u32 CRC-32
/// All integers little-endian; the CRC covers every preceding byte.
void write_session_file(const std::string& path, const SessionHeader& header,
                        std::span<const UtcMicros> timestamps, const RowSource& rows);

class SessionFileReader {
 public:
  /// Throws SessionFileCorrupt on bad magic, size or (when verify_crc) checksum.
  explicit SessionFileReader(const std::string& path, bool verify_crc = true);
  ~SessionFileReader();
  SessionFileReader(const SessionFileReader&) = delete;
  SessionFileReader& operator=(const SessionFileReader&) = delete;

  [[nodiscard]] const SessionHeader& header() const noexcept { return header_; }
  [[nodiscard]] std::uint64_t sample_count() const noexcept { return header_.sample_count; }

  void read_timestamps(std::uint64_t start, std::size_t n, std::vector<UtcMicros>& out) const;
  /// Row-major: n * devices words.
  void read_status(std::uint64_t start, std::size_t n, std::vector<std::uint32_t>& out) const;
  void read_channel(std::size_t channel, std::uint64_t start, std::size_t n, std::vector<double>& out) const;
  /// Row-major volts: n * channels values.
  void read_rows(std::uint64_t start, std::size_t n, std::vector<double>& out) const;

 private:
  void pread_exact(void* dst, std::size_t n, std::uint64_t offset) const;

  int fd_ = -1;
  SessionHeader header_;
  std::uint64_t t_off_ = 0, status_off_ = 0, volts_off_ = 0;
  mutable std::vector<double> column_;
};

}  // namespace beats::recorder
