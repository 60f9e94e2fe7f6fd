#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "alicesays/frame.hpp"

namespace alicesays::channel {

using Millis = std::chrono::milliseconds;

/// A duplex frame endpoint. FIFO per direction. Safe for one concurrent
/// sender and one concurrent receiver.
class Transport {
 public:
  virtual ~Transport() = default;

  /// Throws Error{ClosedPeer} if either side has closed.
  virtual void send(const Frame& f) = 0;
  /// Throws Error{Timeout} when nothing arrives in time and Error{ClosedPeer}
  /// once the peer has closed and every pending frame has been consumed.
  virtual Frame recv(Millis timeout) = 0;
  virtual void close() = 0;
};

using TransportPtr = std::unique_ptr<Transport>;

std::pair<TransportPtr, TransportPtr> make_memory_pair();

class SocketTransport final : public Transport {
 public:
  explicit SocketTransport(int fd);
  ~SocketTransport() override;
  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  static std::unique_ptr<SocketTransport> connect(const std::string& host,
                                                  std::uint16_t port,
                                                  Millis timeout);

  void send(const Frame& f) override;
  Frame recv(Millis timeout) override;
  void close() override;

 private:
  void read_exact(std::uint8_t* dst, std::size_t n, Millis timeout);

  int fd_;
};

class SocketListener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  SocketListener(const std::string& host, std::uint16_t port);
  ~SocketListener();
  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<SocketTransport> accept(Millis timeout);

 private:
  int fd_;
  std::uint16_t port_;
};

}  // namespace alicesays::channel
