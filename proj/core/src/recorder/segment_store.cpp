#include "beats/recorder/segment_store.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include "beats/common/error.hpp"

namespace beats::recorder {

static_assert(std::endian::native == std::endian::little, "segment store is written in host order");

namespace {

constexpr std::uint32_t kSegMagic = 0x47455342;  // "BSEG" little-endian
constexpr std::size_t kSegHeader = 16;

void put32(std::uint8_t* p, std::uint32_t v) { std::memcpy(p, &v, 4); }
std::uint32_t get32(const std::uint8_t* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

bool write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n) {
    const ssize_t w = ::write(fd, data, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

}  // namespace

SegmentStore::SegmentStore(std::filesystem::path dir, std::size_t devices, std::size_t channels,
                           std::uint64_t quota_bytes)
    : dir_(std::move(dir)), devices_(devices), channels_(channels), quota_(quota_bytes) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  const auto spill = dir_ / "segments.spill";
  const auto idx = dir_ / "segments.idx";
  spill_fd_ = ::open(spill.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  index_fd_ = ::open(idx.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (spill_fd_ < 0 || index_fd_ < 0)
    throw Error(ErrorCode::StorageFull, "cannot create segment store in " + dir_.string() + ": " +
                                            std::strerror(errno));
}

SegmentStore::~SegmentStore() {
  if (spill_fd_ >= 0) ::close(spill_fd_);
  if (index_fd_ >= 0) ::close(index_fd_);
}

const SegmentInfo& SegmentStore::append(std::span<const UtcMicros> t, std::span<const std::uint32_t> status,
                                        std::span<const double> volts) {
  const std::size_t n = t.size();
  if (n == 0 || status.size() != n * devices_ || volts.size() != n * channels_)
    throw Error(ErrorCode::InvalidArgument, "segment arrays disagree");
  const std::size_t rec = 8 + 4 * devices_ + 8 * channels_;
  const std::size_t total = kSegHeader + n * rec;
  if (quota_ && bytes_ + total > quota_)
    throw Error(ErrorCode::StorageFull, "segment store quota of " + std::to_string(quota_) + " bytes reached");

  scratch_.resize(total);
  std::uint8_t* p = scratch_.data() + kSegHeader;
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(p, &t[i], 8);
    std::memcpy(p + 8, status.data() + i * devices_, 4 * devices_);
    std::memcpy(p + 8 + 4 * devices_, volts.data() + i * channels_, 8 * channels_);
    p += rec;
  }
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, scratch_.data() + kSegHeader, static_cast<uInt>(total - kSegHeader)));
  put32(scratch_.data(), kSegMagic);
  put32(scratch_.data() + 4, static_cast<std::uint32_t>(index_.size()));
  put32(scratch_.data() + 8, static_cast<std::uint32_t>(n));
  put32(scratch_.data() + 12, crc);

  if (!write_all(spill_fd_, scratch_.data(), total)) {
    const std::string why = std::strerror(errno);
    // roll back a partial write so the file ends on a segment boundary
    if (::ftruncate(spill_fd_, static_cast<off_t>(bytes_)) == 0)
      ::lseek(spill_fd_, static_cast<off_t>(bytes_), SEEK_SET);
    throw Error(ErrorCode::StorageFull, "segment write failed: " + why);
  }

  SegmentInfo info;
  info.index = index_.size();
  info.first_sample = samples_;
  info.samples = static_cast<std::uint32_t>(n);
  info.offset = bytes_;
  info.bytes = static_cast<std::uint32_t>(total);
  info.crc = crc;
  info.t_first = t.front();
  info.t_last = t.back();
  std::uint8_t entry[48];
  std::memcpy(entry, &info.index, 8);
  std::memcpy(entry + 8, &info.first_sample, 8);
  std::memcpy(entry + 16, &info.offset, 8);
  put32(entry + 24, info.samples);
  put32(entry + 28, info.crc);
  std::memcpy(entry + 32, &info.t_first, 8);
  std::memcpy(entry + 40, &info.t_last, 8);
  write_all(index_fd_, entry, sizeof(entry));

  bytes_ += total;
  samples_ += n;
  index_.push_back(info);
  return index_.back();
}

void SegmentStore::read(std::size_t i, std::vector<UtcMicros>& t, std::vector<std::uint32_t>& status,
                        std::vector<double>& volts) const {
  if (i >= index_.size()) throw Error(ErrorCode::SegmentMissing, "segment " + std::to_string(i) + " not indexed");
  const SegmentInfo& info = index_[i];
  read_buf_.resize(info.bytes);
  std::size_t got = 0;
  while (got < info.bytes) {
    const ssize_t r = ::pread(spill_fd_, read_buf_.data() + got, info.bytes - got,
                              static_cast<off_t>(info.offset + got));
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      throw Error(ErrorCode::SegmentMissing, "segment " + std::to_string(i) + " is truncated");
    }
    got += static_cast<std::size_t>(r);
  }
  const std::uint8_t* h = read_buf_.data();
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, h + kSegHeader, static_cast<uInt>(info.bytes - kSegHeader)));
  if (get32(h) != kSegMagic || get32(h + 4) != info.index || get32(h + 8) != info.samples ||
      get32(h + 12) != info.crc || crc != info.crc)
    throw Error(ErrorCode::SegmentMissing, "segment " + std::to_string(i) + " failed its integrity check");

  const std::size_t n = info.samples;
  const std::size_t rec = 8 + 4 * devices_ + 8 * channels_;
  t.resize(n);
  status.resize(n * devices_);
  volts.resize(n * channels_);
  const std::uint8_t* p = h + kSegHeader;
  for (std::size_t k = 0; k < n; ++k) {
    std::memcpy(&t[k], p, 8);
    std::memcpy(status.data() + k * devices_, p + 8, 4 * devices_);
    std::memcpy(volts.data() + k * channels_, p + 8 + 4 * devices_, 8 * channels_);
    p += rec;
  }
}

void SegmentStore::damage_segment(std::size_t i) {
  const SegmentInfo& info = index_.at(i);
  std::uint8_t b = 0;
  const auto off = static_cast<off_t>(info.offset + kSegHeader);
  if (::pread(spill_fd_, &b, 1, off) == 1) {
    b ^= 0xFF;
    [[maybe_unused]] auto w = ::pwrite(spill_fd_, &b, 1, off);
  }
}

}  // namespace beats::recorder
