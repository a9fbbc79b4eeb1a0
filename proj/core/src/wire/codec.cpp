#include "beats/wire/codec.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <string>

#include "beats/common/error.hpp"

namespace beats::wire {

bool DataPacket::identical(const DataPacket& o) const noexcept {
  if (session_id != o.session_id || seq != o.seq || device_count != o.device_count ||
      channel_count != o.channel_count || t != o.t || status != o.status ||
      volts.size() != o.volts.size())
    return false;
  return volts.empty() ||
         std::memcmp(volts.data(), o.volts.data(), volts.size() * sizeof(double)) == 0;
}

// ---------------------------------------------------------------------------
// encoding

namespace {

void append_escaped(std::string& out, std::string_view s) {
  out.push_back('"');
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          constexpr char hex[] = "0123456789abcdef";
          out += "\\u00";
          out.push_back(hex[(c >> 4) & 0xF]);
          out.push_back(hex[c & 0xF]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

template <typename T>
void append_number(std::string& out, T value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

void append_volts(std::string& out, double v) {
  if (!std::isfinite(v))
    throw Error(ErrorCode::InvalidArgument, "non-finite voltage cannot be encoded as JSON");
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

std::string encode_payload(const DataPacket& p) {
  if (p.status.size() != p.sample_count() * p.device_count ||
      p.volts.size() != p.sample_count() * p.channel_count)
    throw Error(ErrorCode::InvalidArgument, "packet arrays disagree with its sample count");
  std::string out;
  out.reserve(64 + p.sample_count() * (40 + 12 * p.device_count + 24 * p.channel_count));
  out += "{\"session_id\":";
  append_escaped(out, p.session_id);
  out += ",\"seq\":";
  append_number(out, p.seq);
  out += ",\"samples\":[";
  for (std::size_t i = 0; i < p.sample_count(); ++i) {
    if (i) out.push_back(',');
    out += "{\"t\":";
    append_number(out, p.t[i]);
    out += ",\"status\":[";
    const auto st = p.status_of(i);
    for (std::size_t d = 0; d < st.size(); ++d) {
      if (d) out.push_back(',');
      append_number(out, st[d]);
    }
    out += "],\"ch\":[";
    const auto v = p.volts_of(i);
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (c) out.push_back(',');
      append_volts(out, v[c]);
    }
    out += "]}";
  }
  out += "]}";
  return out;
}

void encode_packet_into(const DataPacket& packet, std::vector<std::uint8_t>& out) {
  const std::string payload = encode_payload(packet);
  if (payload.size() > kMaxPayloadBytes)
    throw Error(ErrorCode::PacketTooLarge,
                "payload of " + std::to_string(payload.size()) + " bytes exceeds the 16 MiB bound");
  const std::size_t base = out.size();
  out.resize(base + kHeaderBytes + payload.size());
  put_be32(static_cast<std::uint32_t>(payload.size()), out.data() + base);
  std::memcpy(out.data() + base + kHeaderBytes, payload.data(), payload.size());
}

std::vector<std::uint8_t> encode_packet(const DataPacket& packet) {
  std::vector<std::uint8_t> out;
  encode_packet_into(packet, out);
  return out;
}

// ---------------------------------------------------------------------------
// decoding

namespace {

class PayloadParser {
 public:
  PayloadParser(std::string_view text, std::uint64_t base) : s_(text), base_(base) {}

  DataPacket parse() {
    DataPacket p;
    bool have_id = false, have_seq = false, have_samples = false;
    ws();
    expect('{');
    ws();
    if (peek() == '}') fail("empty packet object");
    while (true) {
      ws();
      const std::string key = string();
      ws();
      expect(':');
      ws();
      if (key == "session_id") {
        if (have_id) fail("duplicate key session_id");
        p.session_id = string();
        have_id = true;
      } else if (key == "seq") {
        if (have_seq) fail("duplicate key seq");
        p.seq = unsigned_integer<std::uint64_t>();
        have_seq = true;
      } else if (key == "samples") {
        if (have_samples) fail("duplicate key samples");
        samples(p);
        have_samples = true;
      } else {
        fail("unknown key '" + key + "'");
      }
      ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      break;
    }
    ws();
    if (pos_ != s_.size()) fail("trailing bytes after packet object");
    if (!have_id || !have_seq || !have_samples) fail("packet is missing session_id, seq or samples");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw StreamError(ErrorCode::MalformedJson, "malformed packet JSON: " + what, base_ + pos_);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void ws() {
    while (pos_ < s_.size() &&
           (s_[pos_] == ' ' || s_[pos_] == '\n' || s_[pos_] == '\r' || s_[pos_] == '\t'))
      ++pos_;
  }

  static void put_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }

  std::uint32_t hex4() {
    if (pos_ + 4 > s_.size()) fail("truncated \\u escape");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const char c = s_[pos_++];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint32_t>(c - 'A' + 10);
      else fail("bad hex digit in \\u escape");
    }
    return v;
  }

  std::string string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') break;
      if (static_cast<unsigned char>(c) < 0x20) fail("control character in string");
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      const char e = s_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case '/': out.push_back('/'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'u': {
          std::uint32_t cp = hex4();
          if (cp >= 0xD800 && cp < 0xDC00) {
            if (peek() != '\\') fail("lone high surrogate");
            ++pos_;
            expect('u');
            const std::uint32_t lo = hex4();
            if (lo < 0xDC00 || lo >= 0xE000) fail("bad low surrogate");
            cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
          } else if (cp >= 0xDC00 && cp < 0xE000) {
            fail("lone low surrogate");
          }
          put_utf8(out, cp);
          break;
        }
        default:
          fail("unknown escape");
      }
    }
    return out;
  }

  // JSON number grammar; returns the token
  std::string_view number_token(bool allow_fraction) {
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    if (peek() == '0') {
      ++pos_;
    } else if (peek() >= '1' && peek() <= '9') {
      while (peek() >= '0' && peek() <= '9') ++pos_;
    } else {
      fail("expected a number");
    }
    if (peek() == '.' || peek() == 'e' || peek() == 'E') {
      if (!allow_fraction) fail("expected an integer");
      if (peek() == '.') {
        ++pos_;
        if (!(peek() >= '0' && peek() <= '9')) fail("digit expected after '.'");
        while (peek() >= '0' && peek() <= '9') ++pos_;
      }
      if (peek() == 'e' || peek() == 'E') {
        ++pos_;
        if (peek() == '+' || peek() == '-') ++pos_;
        if (!(peek() >= '0' && peek() <= '9')) fail("digit expected in exponent");
        while (peek() >= '0' && peek() <= '9') ++pos_;
      }
    }
    return s_.substr(start, pos_ - start);
  }

  template <typename T>
  T unsigned_integer() {
    const std::size_t at = pos_;
    const auto tok = number_token(false);
    if (tok.front() == '-') {
      pos_ = at;
      fail("negative value where an unsigned integer is required");
    }
    T v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{}) {
      pos_ = at;
      fail("integer out of range");
    }
    return v;
  }

  std::int64_t signed_integer() {
    const std::size_t at = pos_;
    const auto tok = number_token(false);
    std::int64_t v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{}) {
      pos_ = at;
      fail("integer out of range");
    }
    return v;
  }

  double real() {
    const std::size_t at = pos_;
    const auto tok = number_token(true);
    double v{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || !std::isfinite(v)) {
      pos_ = at;
      fail("number out of range");
    }
    return v;
  }

  template <typename Fn>
  std::size_t array(Fn&& element) {
    expect('[');
    ws();
    std::size_t n = 0;
    if (peek() == ']') {
      ++pos_;
      return 0;
    }
    while (true) {
      ws();
      element();
      ++n;
      ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect(']');
      return n;
    }
  }

  void samples(DataPacket& p) {
    bool first = true;
    array([&] {
      bool have_t = false, have_status = false, have_ch = false;
      expect('{');
      while (true) {
        ws();
        const std::string key = string();
        ws();
        expect(':');
        ws();
        if (key == "t") {
          if (have_t) fail("duplicate key t");
          p.t.push_back(signed_integer());
          have_t = true;
        } else if (key == "status") {
          if (have_status) fail("duplicate key status");
          const std::size_t n = array([&] {
            const auto w = unsigned_integer<std::uint32_t>();
            if (w > 0xFFFFFFu) fail("status word exceeds 24 bits");
            p.status.push_back(w);
          });
          if (first) p.device_count = n;
          else if (n != p.device_count) fail("status length differs between samples");
          have_status = true;
        } else if (key == "ch") {
          if (have_ch) fail("duplicate key ch");
          const std::size_t n = array([&] { p.volts.push_back(real()); });
          if (first) p.channel_count = n;
          else if (n != p.channel_count) fail("channel count differs between samples");
          have_ch = true;
        } else {
          fail("unknown sample key '" + key + "'");
        }
        ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect('}');
        break;
      }
      if (!have_t || !have_status || !have_ch) fail("sample is missing t, status or ch");
      first = false;
    });
  }

  std::string_view s_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

}  // namespace

DataPacket decode_payload(std::string_view payload, std::uint64_t base_offset) {
  return PayloadParser(payload, base_offset).parse();
}

// ---------------------------------------------------------------------------

std::vector<DataPacket> StreamDecoder::feed(std::span<const std::uint8_t> chunk) {
  std::vector<DataPacket> out;
  feed(chunk, out);
  return out;
}

void StreamDecoder::feed(std::span<const std::uint8_t> chunk, std::vector<DataPacket>& out) {
  if (read_pos_ > 0 && read_pos_ == buffer_.size()) {
    buffer_.clear();
    read_pos_ = 0;
  }
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  while (buffer_.size() - read_pos_ >= kHeaderBytes) {
    const std::uint32_t len = get_be32(buffer_.data() + read_pos_);
    if (len == 0 || len > kMaxPayloadBytes)
      throw StreamError(ErrorCode::CorruptHeader,
                        "frame header declares " + std::to_string(len) + " bytes", bytes_consumed_);
    if (buffer_.size() - read_pos_ < kHeaderBytes + len) break;
    const auto* payload = reinterpret_cast<const char*>(buffer_.data() + read_pos_ + kHeaderBytes);
    out.push_back(decode_payload(std::string_view(payload, len), bytes_consumed_ + kHeaderBytes));
    read_pos_ += kHeaderBytes + len;
    bytes_consumed_ += kHeaderBytes + len;
    ++packets_decoded_;
  }
  // compact once the consumed prefix dominates
  if (read_pos_ > 0 && read_pos_ * 2 >= buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(read_pos_));
    read_pos_ = 0;
  }
}

}  // namespace beats::wire
