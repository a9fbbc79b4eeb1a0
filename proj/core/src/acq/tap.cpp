#include "beats/acq/tap.hpp"

#include <bit>
#include <cstring>

#include "beats/common/error.hpp"

namespace beats::acq {

static_assert(std::endian::native == std::endian::little, "tap files are written in host order");

namespace {
constexpr char kTapMagic[8] = {'B', 'E', 'A', 'T', 'S', 'T', 'A', 'P'};
}

TapWriter::TapWriter(const std::string& path, std::size_t devices, std::size_t channels)
    : devices_(devices), channels_(channels) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) throw Error(ErrorCode::InvalidArgument, "cannot create tap file " + path);
  std::setvbuf(file_, nullptr, _IOFBF, 1 << 20);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(devices), static_cast<std::uint32_t>(channels)};
  std::fwrite(kTapMagic, 1, 8, file_);
  std::fwrite(dims, 4, 2, file_);
}

TapWriter::~TapWriter() {
  if (file_) std::fclose(file_);
}

void TapWriter::write(const wire::DataPacket& p) {
  for (std::size_t i = 0; i < p.sample_count(); ++i) {
    std::fwrite(&p.t[i], 8, 1, file_);
    std::fwrite(p.status_of(i).data(), 4, devices_, file_);
    std::fwrite(p.volts_of(i).data(), 8, channels_, file_);
  }
  samples_ += p.sample_count();
}

void TapWriter::flush() { std::fflush(file_); }

TapReader::TapReader(const std::string& path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) throw Error(ErrorCode::InvalidArgument, "cannot open tap file " + path);
  char magic[8];
  std::uint32_t dims[2];
  if (std::fread(magic, 1, 8, file_) != 8 || std::memcmp(magic, kTapMagic, 8) != 0 ||
      std::fread(dims, 4, 2, file_) != 2)
    throw Error(ErrorCode::InvalidArgument, "not a tap file: " + path);
  devices_ = dims[0];
  channels_ = dims[1];
}

TapReader::~TapReader() {
  if (file_) std::fclose(file_);
}

bool TapReader::next(UtcMicros& t, std::vector<std::uint32_t>& status, std::vector<double>& volts) {
  status.resize(devices_);
  volts.resize(channels_);
  if (std::fread(&t, 8, 1, file_) != 1) return false;
  if (std::fread(status.data(), 4, devices_, file_) != devices_ ||
      std::fread(volts.data(), 8, channels_, file_) != channels_)
    throw Error(ErrorCode::InvalidArgument, "truncated tap record");
  return true;
}

void TapSink::open(const std::string& id, std::size_t devices, std::size_t channels) {
  inner_.open(id, devices, channels);
  writer_ = std::make_unique<TapWriter>(path_, devices, channels);
}

void TapSink::send(const wire::DataPacket& packet) {
  inner_.send(packet);
  writer_->write(packet);
}

void TapSink::close() {
  if (writer_) writer_->flush();
  inner_.close();
}

}  // namespace beats::acq
