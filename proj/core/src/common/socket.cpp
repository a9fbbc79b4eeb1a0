#include "beats/common/socket.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "beats/common/error.hpp"

namespace beats {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep, ErrorCode code) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = ep.host.empty() ? "0.0.0.0" : ep.host;
  if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || !res)
    throw Error(code, "cannot resolve host '" + host + "': " + ::gai_strerror(rc));
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  Endpoint ep;
  const auto colon = text.rfind(':');
  std::string port_text = text;
  if (colon != std::string::npos) {
    if (colon > 0) ep.host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535 || port_text.empty())
    throw Error(ErrorCode::InvalidConfig, "bad endpoint '" + text + "', expected host:port");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

Socket Socket::connect(const Endpoint& endpoint) {
  const sockaddr_in addr = resolve(endpoint, ErrorCode::TransportError);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(ErrorCode::TransportError, "socket(): " + errno_text());
  if (::connect(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
    throw Error(ErrorCode::TransportError, "cannot connect to " + endpoint.str() + ": " + errno_text());
  const int one = 1;
  ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

Socket Socket::listen(const Endpoint& endpoint, int backlog) {
  const sockaddr_in addr = resolve(endpoint, ErrorCode::BindFailed);
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) throw Error(ErrorCode::BindFailed, "socket(): " + errno_text());
  const int one = 1;
  ::setsockopt(s.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(s.fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
    throw Error(ErrorCode::BindFailed, "cannot bind " + endpoint.str() + ": " + errno_text());
  if (::listen(s.fd_, backlog) != 0)
    throw Error(ErrorCode::BindFailed, "cannot listen on " + endpoint.str() + ": " + errno_text());
  return s;
}

Socket Socket::accept() {
  while (true) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) return Socket(fd);
    if (errno == EINTR) continue;
    return Socket();
  }
}

void Socket::send_all(std::span<const std::uint8_t> bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::TransportError, "send failed: " + errno_text());
    }
    off += static_cast<std::size_t>(n);
  }
}

std::size_t Socket::receive(std::span<std::uint8_t> buffer) {
  while (true) {
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EBADF || errno == EINVAL || errno == ENOTCONN) return 0;
    throw Error(ErrorCode::TransportError, "recv failed: " + errno_text());
  }
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::uint16_t Socket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return 0;
  return ntohs(addr.sin_port);
}

}  // namespace beats
