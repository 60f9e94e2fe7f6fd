#include "alicesays/websocket.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <random>
#include <vector>

#include "alicesays/error.hpp"

namespace alicesays::ws {

namespace {

constexpr char kGuid[] = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxMessage = 1 << 16;
constexpr std::size_t kMaxRequest = 8192;

enum Opcode : std::uint8_t {
  kContinuation = 0x0,
  kText = 0x1,
  kBinary = 0x2,
  kClose = 0x8,
  kPing = 0x9,
  kPong = 0xA,
};

std::string base64(const unsigned char* data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int len = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data,
                                  static_cast<int>(n));
  out.resize(static_cast<std::size_t>(len));
  return out;
}

void write_all(int fd, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::ClosedPeer, "websocket write failed");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Reads up to and including the blank line ending an HTTP head.
std::string read_http_head(int fd, std::chrono::milliseconds timeout) {
  std::string head;
  char ch = 0;
  while (head.size() < kMaxRequest) {
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc <= 0) throw Error(ErrorCode::Timeout, "websocket handshake timed out");
    const ssize_t r = ::recv(fd, &ch, 1, 0);
    if (r <= 0) throw Error(ErrorCode::ClosedPeer, "connection closed during handshake");
    head.push_back(ch);
    if (head.size() >= 4 && head.compare(head.size() - 4, 4, "\r\n\r\n") == 0) return head;
  }
  throw Error(ErrorCode::InvalidInput, "HTTP request head too large");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::optional<std::string> header(const std::string& head, const std::string& name) {
  const std::string needle = "\r\n" + lower(name) + ":";
  const std::string low = lower(head);
  const auto pos = low.find(needle);
  if (pos == std::string::npos) return std::nullopt;
  auto start = pos + needle.size();
  const auto end = head.find("\r\n", start);
  while (start < end && head[start] == ' ') ++start;
  return head.substr(start, end - start);
}

}  // namespace

std::string accept_key(const std::string& client_key) {
  const std::string joined = client_key + kGuid;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
  return base64(digest, sizeof digest);
}

Connection::Connection(int fd, Side side) : fd_(fd), side_(side) {
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

Connection::~Connection() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Connection> Connection::accept_upgrade(int fd,
                                                       std::chrono::milliseconds timeout) {
  std::string head;
  try {
    head = read_http_head(fd, timeout);
  } catch (const Error&) {
    ::close(fd);
    throw;
  }
  const auto key = header(head, "Sec-WebSocket-Key");
  const auto upgrade = header(head, "Upgrade");
  if (!key || !upgrade || lower(*upgrade) != "websocket") {
    static constexpr char kBody[] =
        "alicesays pairing service: connect with a WebSocket client\n";
    const std::string resp = "HTTP/1.1 426 Upgrade Required\r\nUpgrade: websocket\r\n"
                             "Content-Type: text/plain\r\nConnection: close\r\n"
                             "Content-Length: " +
                             std::to_string(sizeof kBody - 1) + "\r\n\r\n" + kBody;
    try {
      write_all(fd, resp.data(), resp.size());
    } catch (const Error&) {
    }
    ::close(fd);
    return nullptr;
  }
  const std::string resp = "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\n"
                           "Connection: Upgrade\r\nSec-WebSocket-Accept: " +
                           accept_key(*key) + "\r\n\r\n";
  write_all(fd, resp.data(), resp.size());
  return std::make_unique<Connection>(fd, Side::Server);
}

std::unique_ptr<Connection> Connection::connect(const std::string& host, std::uint16_t port,
                                                const std::string& path,
                                                std::chrono::milliseconds timeout) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw Error(ErrorCode::InvalidInput, "websocket client needs an IPv4 address");
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw Error(ErrorCode::Io, "socket failed");
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd);
    throw Error(ErrorCode::Io, std::string("connect failed: ") + std::strerror(errno));
  }
  std::array<unsigned char, 16> nonce{};
  std::random_device rd;
  for (auto& b : nonce) b = static_cast<unsigned char>(rd());
  const std::string key = base64(nonce.data(), nonce.size());
  const std::string req = "GET " + path + " HTTP/1.1\r\nHost: " + host + ":" +
                          std::to_string(port) +
                          "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                          "Sec-WebSocket-Key: " +
                          key + "\r\nSec-WebSocket-Version: 13\r\n\r\n";
  std::string head;
  try {
    write_all(fd, req.data(), req.size());
    head = read_http_head(fd, timeout);
  } catch (const Error&) {
    ::close(fd);
    throw;
  }
  const auto accept = header(head, "Sec-WebSocket-Accept");
  if (head.rfind("HTTP/1.1 101", 0) != 0 || !accept || *accept != accept_key(key)) {
    ::close(fd);
    throw Error(ErrorCode::ProtocolAbort, "websocket upgrade refused");
  }
  return std::make_unique<Connection>(fd, Side::Client);
}

void Connection::send_frame(std::uint8_t opcode, const std::string& payload) {
  std::lock_guard lock(send_mu_);
  if (fd_ < 0) throw Error(ErrorCode::ClosedPeer, "websocket closed");
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(0x80 | opcode));
  const std::uint8_t mask_bit = side_ == Side::Client ? 0x80 : 0x00;
  const std::size_t n = payload.size();
  if (n < 126) {
    out.push_back(static_cast<std::uint8_t>(mask_bit | n));
  } else if (n <= 0xFFFF) {
    out.push_back(mask_bit | 126);
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
  } else {
    out.push_back(mask_bit | 127);
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  }
  std::array<std::uint8_t, 4> mask{};
  if (side_ == Side::Client) {
    std::random_device rd;
    for (auto& b : mask) b = static_cast<std::uint8_t>(rd());
    out.insert(out.end(), mask.begin(), mask.end());
  }
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(static_cast<std::uint8_t>(payload[i]) ^ mask[i % 4]);
  write_all(fd_, out.data(), out.size());
}

void Connection::send_text(const std::string& text) { send_frame(kText, text); }

bool Connection::wait_readable(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc < 0 && errno == EINTR) continue;
    return rc > 0;
  }
}

void Connection::read_exact(std::uint8_t* dst, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    if (!wait_readable(std::chrono::milliseconds(5000)))
      throw Error(ErrorCode::ClosedPeer, "websocket peer stalled mid-frame");
    const ssize_t r = ::recv(fd_, dst + got, n - got, 0);
    if (r == 0) throw Error(ErrorCode::ClosedPeer, "websocket peer closed");
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw Error(ErrorCode::ClosedPeer, "websocket read failed");
    }
    got += static_cast<std::size_t>(r);
  }
}

std::optional<std::string> Connection::recv_text(std::chrono::milliseconds timeout) {
  if (closed_ || fd_ < 0) throw Error(ErrorCode::ClosedPeer, "websocket closed");
  for (;;) {
    if (!wait_readable(timeout)) return std::nullopt;
    std::uint8_t h[2];
    read_exact(h, 2);
    const bool fin = h[0] & 0x80;
    const std::uint8_t opcode = h[0] & 0x0F;
    const bool masked = h[1] & 0x80;
    std::uint64_t len = h[1] & 0x7F;
    if (len == 126) {
      std::uint8_t ext[2];
      read_exact(ext, 2);
      len = (std::uint64_t{ext[0]} << 8) | ext[1];
    } else if (len == 127) {
      std::uint8_t ext[8];
      read_exact(ext, 8);
      len = 0;
      for (auto b : ext) len = (len << 8) | b;
    }
    if (len > kMaxMessage || partial_.size() + len > kMaxMessage) {
      closed_ = true;
      throw Error(ErrorCode::ClosedPeer, "websocket message too large");
    }
    std::array<std::uint8_t, 4> mask{};
    if (masked) read_exact(mask.data(), 4);
    std::string payload(static_cast<std::size_t>(len), '\0');
    read_exact(reinterpret_cast<std::uint8_t*>(payload.data()), payload.size());
    for (std::size_t i = 0; i < payload.size(); ++i)
      payload[i] = static_cast<char>(static_cast<std::uint8_t>(payload[i]) ^ mask[i % 4]);

    switch (opcode) {
      case kClose:
        closed_ = true;
        try {
          send_frame(kClose, "");
        } catch (const Error&) {
        }
        throw Error(ErrorCode::ClosedPeer, "websocket closed by peer");
      case kPing:
        send_frame(kPong, payload);
        continue;
      case kPong:
        continue;
      case kText:
      case kBinary:
      case kContinuation:
        partial_ += payload;
        if (!fin) continue;
        {
          std::string msg = std::move(partial_);
          partial_.clear();
          return msg;
        }
      default:
        closed_ = true;
        throw Error(ErrorCode::ClosedPeer, "websocket protocol error");
    }
  }
}

void Connection::close() {
  if (fd_ < 0) return;
  try {
    if (!closed_) send_frame(kClose, "");
  } catch (const Error&) {
  }
  std::lock_guard lock(send_mu_);
  ::shutdown(fd_, SHUT_RDWR);
  ::close(fd_);
  fd_ = -1;
  closed_ = true;
}

}  // namespace alicesays::ws
