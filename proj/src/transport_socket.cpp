#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "alicesays/error.hpp"
#include "alicesays/transport.hpp"

namespace alicesays::channel {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
  return left < 0 ? 0 : static_cast<int>(left);
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (host.empty() || host == "0.0.0.0") {
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    return addr;
  }
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw Error(ErrorCode::InvalidInput, "cannot resolve host '" + host + "'");
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

}  // namespace

SocketTransport::SocketTransport(int fd) : fd_(fd) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

SocketTransport::~SocketTransport() { close(); }

std::unique_ptr<SocketTransport> SocketTransport::connect(const std::string& host,
                                                          std::uint16_t port,
                                                          Millis timeout) {
  const sockaddr_in addr = resolve(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) io_error("socket");
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (rc < 0 && errno != EINPROGRESS) {
    ::close(fd);
    io_error("connect");
  }
  if (rc < 0) {
    pollfd p{fd, POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc <= 0 || err != 0) {
      ::close(fd);
      if (rc == 0) throw Error(ErrorCode::Timeout, "connect timed out");
      errno = err;
      io_error("connect");
    }
  }
  ::fcntl(fd, F_SETFL, flags);
  return std::make_unique<SocketTransport>(fd);
}

void SocketTransport::send(const Frame& f) {
  if (fd_ < 0) throw Error(ErrorCode::ClosedPeer, "socket closed");
  const Bytes wire = encode(f);
  std::size_t sent = 0;
  while (sent < wire.size()) {
    const ssize_t n = ::send(fd_, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE || errno == ECONNRESET)
        throw Error(ErrorCode::ClosedPeer, "peer closed connection");
      io_error("send");
    }
    sent += static_cast<std::size_t>(n);
  }
}

void SocketTransport::read_exact(std::uint8_t* dst, std::size_t n, Millis timeout) {
  const auto deadline = Clock::now() + timeout;
  std::size_t got = 0;
  while (got < n) {
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, remaining_ms(deadline));
    if (rc < 0) {
      if (errno == EINTR) continue;
      io_error("poll");
    }
    if (rc == 0) throw Error(ErrorCode::Timeout, "socket recv timed out");
    const ssize_t r = ::recv(fd_, dst + got, n - got, 0);
    if (r == 0) throw Error(ErrorCode::ClosedPeer, "peer closed connection");
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) throw Error(ErrorCode::ClosedPeer, "connection reset");
      io_error("recv");
    }
    got += static_cast<std::size_t>(r);
  }
}

Frame SocketTransport::recv(Millis timeout) {
  if (fd_ < 0) throw Error(ErrorCode::ClosedPeer, "socket closed");
  std::array<std::uint8_t, kHeaderSize> header{};
  read_exact(header.data(), header.size(), timeout);
  const FrameHeader h = decode_header(header);
  Bytes wire(header.begin(), header.end());
  wire.resize(kHeaderSize + h.length);
  // A peer that stalls mid-frame leaves the stream unusable.
  read_exact(wire.data() + kHeaderSize, h.length, timeout);
  return decode(wire);
}

void SocketTransport::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

SocketListener::SocketListener(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = resolve(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) io_error("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
    const int saved = errno;
    ::close(fd_);
    errno = saved;
    io_error("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(fd_, 16) < 0) {
    ::close(fd_);
    io_error("listen");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

SocketListener::~SocketListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<SocketTransport> SocketListener::accept(Millis timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (rc < 0) io_error("poll");
  if (rc == 0) throw Error(ErrorCode::Timeout, "accept timed out");
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) io_error("accept");
  return std::make_unique<SocketTransport>(fd);
}

}  // namespace alicesays::channel
