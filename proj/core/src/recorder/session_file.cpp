#include "beats/recorder/session_file.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>

#include <nlohmann/json.hpp>

#include "beats/common/error.hpp"

namespace beats::recorder {

static_assert(std::endian::native == std::endian::little, "session files are written in host order");

namespace {

constexpr char kMagic[8] = {'B', 'E', 'A', 'T', 'S', 'S', 'E', 'S'};
constexpr std::size_t kPreamble = 16;

using nlohmann::json;

json delay_to_json(const DelaySummary& d) {
  return {{"max_s", d.max_s}, {"mean_s", d.mean_s}, {"count", d.count}, {"hourly_max_s", d.hourly_max_s}};
}

DelaySummary delay_from_json(const json& j) {
  DelaySummary d;
  d.max_s = j.at("max_s").get<double>();
  d.mean_s = j.at("mean_s").get<double>();
  d.count = j.at("count").get<std::uint64_t>();
  d.hourly_max_s = j.at("hourly_max_s").get<std::vector<double>>();
  return d;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::SessionFileCorrupt, what); }

void write_at(int fd, const void* data, std::size_t n, std::uint64_t offset) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (n) {
    const ssize_t w = ::pwrite(fd, p, n, static_cast<off_t>(offset));
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::StorageFull, std::string("session file write failed: ") + std::strerror(errno));
    }
    p += w;
    offset += static_cast<std::uint64_t>(w);
    n -= static_cast<std::size_t>(w);
  }
}

std::uint32_t crc_of_file(int fd, std::uint64_t length) {
  std::vector<std::uint8_t> buf(1 << 20);
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::uint64_t off = 0;
  while (off < length) {
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), length - off));
    const ssize_t r = ::pread(fd, buf.data(), want, static_cast<off_t>(off));
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      corrupt("session file shorter than its header declares");
    }
    crc = ::crc32(crc, buf.data(), static_cast<uInt>(r));
    off += static_cast<std::uint64_t>(r);
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::string SessionHeader::to_json() const {
  json holes_j = json::array();
  for (const auto& h : holes) {
    holes_j.push_back({{"first_missing_seq", h.first_missing_seq},
                       {"missing_packets", h.missing_packets},
                       {"missing_samples", h.missing_samples},
                       {"sample_index", h.sample_index},
                       {"t_before_us", h.t_before_us},
                       {"t_after_us", h.t_after_us}});
  }
  json missing_j = json::array();
  for (const auto& m : missing_segments) {
    missing_j.push_back({{"segment", m.segment},
                         {"samples", m.samples},
                         {"sample_index", m.sample_index},
                         {"t_first_us", m.t_first},
                         {"t_last_us", m.t_last}});
  }
  json events_j = json::array();
  for (const auto& e : events) {
    events_j.push_back({{"id", e.id},
                        {"class", e.label},
                        {"t_utc_us", e.t_utc_us},
                        {"intensity", e.intensity ? json(*e.intensity) : json(nullptr)},
                        {"revoked", e.revoked}});
  }
  json ann_j = json::array();
  for (const auto& a : annotations) {
    ann_j.push_back({{"event_id", a.event_id},
                     {"aligned", a.aligned},
                     {"sample_index", a.sample_index},
                     {"offset_us", a.offset_us}});
  }
  json j = {
      {"format", "beats-session"},
      {"version", kSessionFileVersion},
      {"session_id", session_id},
      {"config",
       {{"device_count", device_count},
        {"channel_count", channel_count},
        {"rate_hz", rate_hz},
        {"gain", gain},
        {"vref", vref},
        {"packet_samples", packet_samples},
        {"samples_per_segment", samples_per_segment}}},
      {"sample_count", sample_count},
      {"packets_received", packets_received},
      {"seq_gaps", seq_gaps},
      {"stale_packets", stale_packets},
      {"samples_unsaved", samples_unsaved},
      {"sample_count_verified", sample_count_verified},
      {"holes", holes_j},
      {"missing_segments", missing_j},
      {"events", events_j},
      {"annotations", ann_j},
      {"alarms", alarms},
      {"protocol_error", protocol_error},
      {"delays", {{"save", delay_to_json(save_delay)}, {"plot", delay_to_json(plot_delay)}}},
  };
  return j.dump();
}

SessionHeader SessionHeader::from_json(std::string_view text) {
  SessionHeader h;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "beats-session") corrupt("not a beats session header");
    h.session_id = j.at("session_id").get<std::string>();
    const json& c = j.at("config");
    h.device_count = c.at("device_count").get<std::size_t>();
    h.channel_count = c.at("channel_count").get<std::size_t>();
    h.rate_hz = c.at("rate_hz").get<double>();
    h.gain = c.at("gain").get<int>();
    h.vref = c.at("vref").get<double>();
    h.packet_samples = c.at("packet_samples").get<std::size_t>();
    h.samples_per_segment = c.at("samples_per_segment").get<std::size_t>();
    h.sample_count = j.at("sample_count").get<std::uint64_t>();
    h.packets_received = j.at("packets_received").get<std::uint64_t>();
    h.seq_gaps = j.at("seq_gaps").get<std::uint64_t>();
    h.stale_packets = j.at("stale_packets").get<std::uint64_t>();
    h.samples_unsaved = j.at("samples_unsaved").get<std::uint64_t>();
    h.sample_count_verified = j.at("sample_count_verified").get<bool>();
    for (const auto& e : j.at("holes")) {
      h.holes.push_back({e.at("first_missing_seq"), e.at("missing_packets"), e.at("missing_samples"),
                         e.at("sample_index"), e.at("t_before_us"), e.at("t_after_us")});
    }
    for (const auto& e : j.at("missing_segments")) {
      h.missing_segments.push_back(
          {e.at("segment"), e.at("samples"), e.at("sample_index"), e.at("t_first_us"), e.at("t_last_us")});
    }
    for (const auto& e : j.at("events")) {
      StimulusEvent ev;
      ev.id = e.at("id");
      ev.label = e.at("class");
      ev.t_utc_us = e.at("t_utc_us");
      if (!e.at("intensity").is_null()) ev.intensity = e.at("intensity").get<int>();
      ev.revoked = e.at("revoked");
      h.events.push_back(ev);
    }
    for (const auto& a : j.at("annotations")) {
      h.annotations.push_back({a.at("event_id"), a.at("aligned"), a.at("sample_index"), a.at("offset_us")});
    }
    h.alarms = j.at("alarms").get<std::vector<std::string>>();
    h.protocol_error = j.at("protocol_error").get<std::string>();
    h.save_delay = delay_from_json(j.at("delays").at("save"));
    h.plot_delay = delay_from_json(j.at("delays").at("plot"));
  } catch (const json::exception& e) {
    corrupt(std::string("session header is not valid: ") + e.what());
  }
  return h;
}

void write_session_file(const std::string& path, const SessionHeader& header,
                        std::span<const UtcMicros> timestamps, const RowSource& rows) {
  if (timestamps.size() != header.sample_count)
    throw Error(ErrorCode::InvalidArgument, "timestamp count differs from header sample_count");
  std::string text = header.to_json();
  text.append((8 - text.size() % 8) % 8, ' ');

  const std::size_t n = header.sample_count, d = header.device_count, c = header.channel_count;
  const std::uint64_t t_off = kPreamble + text.size();
  const std::uint64_t status_off = t_off + 8ull * n;
  const std::uint64_t volts_off = status_off + 4ull * n * d;
  const std::uint64_t end = volts_off + 8ull * n * c;

  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(ErrorCode::StorageFull, "cannot create session file " + path + ": " + std::strerror(errno));
  try {
    std::uint8_t pre[kPreamble];
    std::memcpy(pre, kMagic, 8);
    const std::uint32_t version = kSessionFileVersion;
    const auto hlen = static_cast<std::uint32_t>(text.size());
    std::memcpy(pre + 8, &version, 4);
    std::memcpy(pre + 12, &hlen, 4);
    write_at(fd, pre, kPreamble, 0);
    write_at(fd, text.data(), text.size(), kPreamble);
    if (n) write_at(fd, timestamps.data(), 8 * n, t_off);

    std::vector<std::uint32_t> status;
    std::vector<double> volts;
    std::vector<std::vector<double>> columns(c);
    std::uint64_t done = 0;
    while (done < n) {
      status.clear();
      volts.clear();
      const std::size_t got = rows(status, volts);
      if (got == 0) break;
      if (done + got > n || status.size() != got * d || volts.size() != got * c)
        throw Error(ErrorCode::InvalidArgument, "row source produced inconsistent data");
      write_at(fd, status.data(), 4 * got * d, status_off + 4 * done * d);
      for (std::size_t ch = 0; ch < c; ++ch) {
        auto& col = columns[ch];
        col.resize(got);
        for (std::size_t i = 0; i < got; ++i) col[i] = volts[i * c + ch];
        write_at(fd, col.data(), 8 * got, volts_off + 8 * (ch * n + done));
      }
      done += got;
    }
    if (done != n) throw Error(ErrorCode::InvalidArgument, "row source ended early");
    const std::uint32_t crc = crc_of_file(fd, end);
    write_at(fd, &crc, 4, end);
    ::close(fd);
  } catch (...) {
    ::close(fd);
    throw;
  }
}

SessionFileReader::SessionFileReader(const std::string& path, bool verify_crc) {
  fd_ = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd_ < 0) throw Error(ErrorCode::SessionFileCorrupt, "cannot open session file " + path);
  try {
    struct stat st{};
    ::fstat(fd_, &st);
    const auto size = static_cast<std::uint64_t>(st.st_size);
    if (size < kPreamble + 4) corrupt("session file too short");
    std::uint8_t pre[kPreamble];
    pread_exact(pre, kPreamble, 0);
    if (std::memcmp(pre, kMagic, 8) != 0) corrupt("bad session file magic");
    std::uint32_t version, hlen;
    std::memcpy(&version, pre + 8, 4);
    std::memcpy(&hlen, pre + 12, 4);
    if (version != kSessionFileVersion) corrupt("unsupported session file version " + std::to_string(version));
    if (kPreamble + hlen + 4 > size) corrupt("session header length exceeds file size");
    std::string text(hlen, '\0');
    pread_exact(text.data(), hlen, kPreamble);
    header_ = SessionHeader::from_json(text);

    const std::uint64_t n = header_.sample_count;
    t_off_ = kPreamble + hlen;
    status_off_ = t_off_ + 8 * n;
    volts_off_ = status_off_ + 4 * n * header_.device_count;
    const std::uint64_t end = volts_off_ + 8 * n * header_.channel_count;
    if (end + 4 != size) corrupt("session file size does not match its header");
    if (verify_crc) {
      std::uint32_t stored;
      pread_exact(&stored, 4, end);
      if (crc_of_file(fd_, end) != stored) corrupt("session file checksum mismatch");
    }
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

SessionFileReader::~SessionFileReader() {
  if (fd_ >= 0) ::close(fd_);
}

void SessionFileReader::pread_exact(void* dst, std::size_t n, std::uint64_t offset) const {
  auto* p = static_cast<std::uint8_t*>(dst);
  while (n) {
    const ssize_t r = ::pread(fd_, p, n, static_cast<off_t>(offset));
    if (r <= 0) {
      if (r < 0 && errno == EINTR) continue;
      corrupt("unexpected end of session file");
    }
    p += r;
    offset += static_cast<std::uint64_t>(r);
    n -= static_cast<std::size_t>(r);
  }
}

void SessionFileReader::read_timestamps(std::uint64_t start, std::size_t n, std::vector<UtcMicros>& out) const {
  if (start + n > sample_count()) throw Error(ErrorCode::InvalidArgument, "sample range out of bounds");
  out.resize(n);
  if (n) pread_exact(out.data(), 8 * n, t_off_ + 8 * start);
}

void SessionFileReader::read_status(std::uint64_t start, std::size_t n, std::vector<std::uint32_t>& out) const {
  if (start + n > sample_count()) throw Error(ErrorCode::InvalidArgument, "sample range out of bounds");
  const std::size_t d = header_.device_count;
  out.resize(n * d);
  if (n) pread_exact(out.data(), 4 * n * d, status_off_ + 4 * start * d);
}

void SessionFileReader::read_channel(std::size_t channel, std::uint64_t start, std::size_t n,
                                     std::vector<double>& out) const {
  if (start + n > sample_count() || channel >= header_.channel_count)
    throw Error(ErrorCode::InvalidArgument, "sample range out of bounds");
  out.resize(n);
  if (n) pread_exact(out.data(), 8 * n, volts_off_ + 8 * (channel * sample_count() + start));
}

void SessionFileReader::read_rows(std::uint64_t start, std::size_t n, std::vector<double>& out) const {
  const std::size_t c = header_.channel_count;
  out.resize(n * c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    read_channel(ch, start, n, column_);
    for (std::size_t i = 0; i < n; ++i) out[i * c + ch] = column_[i];
  }
}

}  // namespace beats::recorder
