#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "alicesays/adversary.hpp"
#include "alicesays/game.hpp"

// Live two-player pairing: a lobby pairs two clients, the service hosts both
// devices (display and input engines plus the in-band pairing between them)
// and relays flashes, presses and status to the clients. Client messages
// never carry pattern indices; presses and controls reach only the sender's
// own engine.
namespace alicesays::service {

inline constexpr int kSchemaVersion = 1;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8787;
  int oob_bits = sas::kDefaultOobBits;
  int abort_threshold = game::kDefaultAbortThreshold;
  double flash_ms = 300.0;
  channel::AdversaryPolicy::Mode adversary = channel::AdversaryPolicy::Mode::Passive;
  std::uint64_t seed = 0;  // adversary key material only
  bool verbose = false;

  static ServiceConfig from_json(const nlohmann::json& j);
  void validate() const;
};

using ClientId = std::uint64_t;
using Sink = std::function<void(const nlohmann::json&)>;

/// Lobby and session authority. Transport-agnostic: the WebSocket server and
/// the tests both feed it raw text and receive JSON through per-client sinks.
class Hub {
 public:
  explicit Hub(ServiceConfig config, std::function<void(const std::string&)> log = {});
  ~Hub();

  ClientId connect(Sink sink);
  void on_message(ClientId client, const std::string& text);
  void disconnect(ClientId client);

  std::size_t lobby_count() const;

 private:
  struct Device {
    ClientId client = 0;
    std::unique_ptr<game::Engine> engine;
  };
  struct Session {
    Device display;
    Device input;
    bool announced_pairing = false;
  };
  struct Lobby {
    std::vector<ClientId> members;
    bool tamper = false;  // any member asked for the MITM interposer
    std::unique_ptr<Session> session;
  };
  struct Client {
    Sink sink;
    std::string lobby;
  };

  void handle(ClientId id, const nlohmann::json& msg);
  void join(ClientId id, const std::string& lobby, bool tamper);
  void press(ClientId id, Lobby& lobby, const std::string& color);
  void control(ClientId id, Lobby& lobby, const std::string& action);
  void start_session(const std::string& name, Lobby& lobby, bool restart);
  void flash_pattern(Session& s);
  void report_status(Device& d, const std::string& event, nlohmann::json extra = {});
  void check_paired(Session& s);
  void end_lobby(const std::string& name, const std::string& event, ClientId except);
  void send(ClientId id, nlohmann::json msg);
  void error(ClientId id, const std::string& reason);

  ServiceConfig config_;
  std::function<void(const std::string&)> log_;
  mutable std::mutex mu_;
  ClientId next_id_ = 1;
  std::uint64_t sessions_started_ = 0;
  std::map<ClientId, Client> clients_;
  std::map<std::string, Lobby> lobbies_;
};

/// WebSocket front end for a Hub. Binding happens in the constructor, so an
/// address already in use fails there with Error{Io}.
class Server {
 public:
  explicit Server(ServiceConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  /// Blocks until stop().
  void run();
  /// Safe from any thread; only sets a flag.
  void stop() noexcept { stop_ = true; }

 private:
  void serve_client(int fd);

  ServiceConfig config_;
  Hub hub_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::mutex threads_mu_;
  std::vector<std::thread> threads_;
};

}  // namespace alicesays::service
