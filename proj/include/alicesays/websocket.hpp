#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace alicesays::ws {

/// Minimal RFC 6455 text-message endpoint over a connected TCP socket.
/// Server side sends unmasked frames; client side masks.
class Connection {
 public:
  enum class Side { Server, Client };

  Connection(int fd, Side side);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  /// Performs the opening handshake on an accepted socket. Returns nullptr
  /// (and answers with a plain HTTP response) for non-upgrade requests.
  static std::unique_ptr<Connection> accept_upgrade(int fd, std::chrono::milliseconds timeout);
  static std::unique_ptr<Connection> connect(const std::string& host, std::uint16_t port,
                                             const std::string& path,
                                             std::chrono::milliseconds timeout);

  /// Thread-safe.
  void send_text(const std::string& text);
  /// nullopt on timeout; throws Error{ClosedPeer} after a close frame or EOF.
  std::optional<std::string> recv_text(std::chrono::milliseconds timeout);
  void close();

 private:
  void send_frame(std::uint8_t opcode, const std::string& payload);
  bool wait_readable(std::chrono::milliseconds timeout);
  void read_exact(std::uint8_t* dst, std::size_t n);

  int fd_;
  Side side_;
  std::mutex send_mu_;
  std::string partial_;
  bool closed_ = false;
};

/// Sec-WebSocket-Accept value for a client key.
std::string accept_key(const std::string& client_key);

}  // namespace alicesays::ws
