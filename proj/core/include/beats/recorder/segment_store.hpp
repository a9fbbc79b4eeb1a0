#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "beats/common/time.hpp"

namespace beats::recorder {

struct SegmentInfo {
  std::uint64_t index = 0;
  std::uint64_t first_sample = 0;  // position in the stored sample stream
  std::uint32_t samples = 0;
  std::uint64_t offset = 0;        // byte offset of the segment header in the spill file
  std::uint32_t bytes = 0;         // header + payload
  std::uint32_t crc = 0;           // CRC-32 of the payload
  UtcMicros t_first = 0;
  UtcMicros t_last = 0;
};

/// Append-only spill file of short sample segments plus a binary index.
///
/// Each segment is a 16-byte header (magic "BSEG", index, sample count,
/// payload CRC-32) followed by row-major records
/// [i64 t][u32 status x devices][f64 volts x channels], little-endian.
class SegmentStore {
 public:
  /// Creates `dir` if needed and truncates any previous spill/index files.
  /// quota_bytes = 0 means unlimited.
  SegmentStore(std::filesystem::path dir, std::size_t devices, std::size_t channels,
               std::uint64_t quota_bytes = 0);
  ~SegmentStore();
  SegmentStore(const SegmentStore&) = delete;
  SegmentStore& operator=(const SegmentStore&) = delete;

  /// Throws StorageFull when the quota or the disk is exhausted; the store
  /// stays consistent (the failed segment is not indexed).
  const SegmentInfo& append(std::span<const UtcMicros> t, std::span<const std::uint32_t> status,
                            std::span<const double> volts);

  /// Throws SegmentMissing when the segment cannot be read back intact.
  void read(std::size_t i, std::vector<UtcMicros>& t, std::vector<std::uint32_t>& status,
            std::vector<double>& volts) const;

  [[nodiscard]] const std::vector<SegmentInfo>& segments() const noexcept { return index_; }
  [[nodiscard]] std::uint64_t samples() const noexcept { return samples_; }
  [[nodiscard]] std::uint64_t bytes() const noexcept { return bytes_; }
  [[nodiscard]] std::size_t devices() const noexcept { return devices_; }
  [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
  [[nodiscard]] const std::filesystem::path& directory() const noexcept { return dir_; }

  /// Test hook: overwrites one payload byte of segment i on disk.
  void damage_segment(std::size_t i);

 private:
  std::filesystem::path dir_;
  std::size_t devices_, channels_;
  std::uint64_t quota_;
  int spill_fd_ = -1;
  int index_fd_ = -1;
  std::uint64_t bytes_ = 0;
  std::uint64_t samples_ = 0;
  std::vector<SegmentInfo> index_;
  std::vector<std::uint8_t> scratch_;
  mutable std::vector<std::uint8_t> read_buf_;
};

}  // namespace beats::recorder
