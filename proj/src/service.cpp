#include "alicesays/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>

#include "alicesays/error.hpp"
#include "alicesays/websocket.hpp"

namespace alicesays::service {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxLobbyName = 64;
constexpr std::chrono::milliseconds kPoll{100};
constexpr std::chrono::milliseconds kPairingTimeout{3000};

channel::AdversaryPolicy::Mode parse_adversary(const std::string& name) {
  using Mode = channel::AdversaryPolicy::Mode;
  for (Mode m : {Mode::Passive, Mode::MitmSubstitute, Mode::CorruptBits, Mode::Drop})
    if (name == channel::to_string(m)) return m;
  throw Error(ErrorCode::InvalidInput, "unknown adversary '" + name +
                                           "' (passive, mitm, corrupt or drop)");
}

channel::AdversaryPolicy make_policy(channel::AdversaryPolicy::Mode mode, std::uint64_t seed) {
  using Mode = channel::AdversaryPolicy::Mode;
  switch (mode) {
    case Mode::Passive: return channel::AdversaryPolicy::passive();
    case Mode::MitmSubstitute: return channel::AdversaryPolicy::mitm(seed);
    // Frame 1 is the responder's key and nonce: both sides finish pairing
    // with different strings.
    case Mode::CorruptBits: return channel::AdversaryPolicy::corrupt({{1, 7}});
    // Frame 2 is the opening; the responder never completes.
    case Mode::Drop: return channel::AdversaryPolicy::drop({2});
  }
  return channel::AdversaryPolicy::passive();
}

}  // namespace

ServiceConfig ServiceConfig::from_json(const json& j) {
  ServiceConfig c;
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  c.oob_bits = j.value("bits", c.oob_bits);
  c.abort_threshold = j.value("threshold", c.abort_threshold);
  c.flash_ms = j.value("flash_ms", c.flash_ms);
  c.adversary = parse_adversary(j.value("adversary", std::string("passive")));
  c.seed = j.value("seed", c.seed);
  c.verbose = j.value("verbose", c.verbose);
  c.validate();
  return c;
}

void ServiceConfig::validate() const {
  sas::validate_oob_bits(oob_bits);
  if (abort_threshold < 1) throw Error(ErrorCode::InvalidInput, "threshold must be >= 1");
  if (!(flash_ms > 0)) throw Error(ErrorCode::InvalidInput, "flash_ms must be > 0");
}

Hub::Hub(ServiceConfig config, std::function<void(const std::string&)> log)
    : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
}

Hub::~Hub() = default;

std::size_t Hub::lobby_count() const {
  std::lock_guard lock(mu_);
  return lobbies_.size();
}

ClientId Hub::connect(Sink sink) {
  std::lock_guard lock(mu_);
  const ClientId id = next_id_++;
  clients_[id] = Client{std::move(sink), {}};
  return id;
}

void Hub::send(ClientId id, json msg) {
  auto it = clients_.find(id);
  if (it == clients_.end()) return;
  json out = {{"schema_version", kSchemaVersion}};
  out.update(msg);
  it->second.sink(out);
}

void Hub::error(ClientId id, const std::string& reason) {
  if (log_) log_("client " + std::to_string(id) + ": " + reason);
  send(id, {{"type", "error"}, {"reason", reason}});
}

void Hub::on_message(ClientId id, const std::string& text) {
  std::lock_guard lock(mu_);
  if (!clients_.count(id)) return;
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception&) {
    error(id, "malformed message: not JSON");
    return;
  }
  if (!msg.is_object() || !msg.contains("schema_version") ||
      msg["schema_version"] != kSchemaVersion) {
    error(id, "malformed message: schema_version " + std::to_string(kSchemaVersion) +
                  " required");
    return;
  }
  try {
    handle(id, msg);
  } catch (const Error& e) {
    error(id, e.what());
  } catch (const json::exception& e) {
    error(id, std::string("malformed message: ") + e.what());
  }
}

void Hub::handle(ClientId id, const json& msg) {
  const std::string type = msg.value("type", "");
  if (type == "join") {
    join(id, msg.at("lobby").get<std::string>(), msg.value("tamper", false));
    return;
  }
  if (type != "press" && type != "ctl") {
    error(id, "unknown message type '" + type + "'");
    return;
  }
  const std::string& name = clients_[id].lobby;
  auto it = lobbies_.find(name);
  if (name.empty() || it == lobbies_.end()) {
    error(id, "join a lobby first");
    return;
  }
  if (!it->second.session) {
    error(id, "waiting for a second player");
    return;
  }
  if (type == "press")
    press(id, it->second, msg.at("color").get<std::string>());
  else
    control(id, it->second, msg.at("action").get<std::string>());
}

void Hub::join(ClientId id, const std::string& name, bool tamper) {
  if (name.empty() || name.size() > kMaxLobbyName) {
    error(id, "lobby name must be 1.." + std::to_string(kMaxLobbyName) + " characters");
    return;
  }
  if (!clients_[id].lobby.empty()) {
    error(id, "already in lobby '" + clients_[id].lobby + "'");
    return;
  }
  Lobby& lobby = lobbies_[name];
  if (lobby.members.size() >= 2) {
    error(id, "lobby '" + name + "' is full");
    return;
  }
  lobby.members.push_back(id);
  lobby.tamper = lobby.tamper || tamper;
  clients_[id].lobby = name;
  send(id, {{"type", "joined"},
            {"lobby", name},
            {"members", lobby.members.size()}});
  if (lobby.members.size() == 2) start_session(name, lobby, false);
}

void Hub::start_session(const std::string& name, Lobby& lobby, bool restart) {
  sas::PairingConfig pc;
  pc.oob_bits = config_.oob_bits;
  pc.timeout = kPairingTimeout;

  auto [a, b] = channel::make_memory_pair();
  channel::TransportPtr initiator_side = std::move(a);
  using Mode = channel::AdversaryPolicy::Mode;
  // The service-wide adversary wins over a lobby's tamper toggle.
  const Mode mode = config_.adversary != Mode::Passive ? config_.adversary
                    : lobby.tamper                     ? Mode::MitmSubstitute
                                                       : Mode::Passive;
  if (mode != Mode::Passive)
    initiator_side = channel::interpose(make_policy(mode, config_.seed + sessions_started_),
                                        std::move(initiator_side), pc);
  ++sessions_started_;

  std::optional<sas::PairingResult> initiator, responder;
  std::optional<Error> failure;
  std::thread t([&, &ch = *initiator_side] {
    try {
      initiator = sas::run_pairing(sas::PairingRole::Initiator, ch, pc);
    } catch (const Error& e) {
      ch.close();
      failure = e;
    }
  });
  try {
    responder = sas::run_pairing(sas::PairingRole::Responder, *b, pc);
  } catch (const Error& e) {
    b->close();
    if (!failure) failure = e;
  }
  t.join();
  if (failure && !(initiator && responder)) {
    if (log_) log_("lobby " + name + ": pairing failed: " + failure->what());
    end_lobby(name, "PairingFailed", 0);
    return;
  }

  const game::GameConfig gc{config_.oob_bits / 2, config_.abort_threshold};
  auto session = std::make_unique<Session>();
  session->display.client = lobby.members[0];
  session->display.engine = std::make_unique<game::Engine>(
      game::Role::Display, game::colors_from_bits(initiator->oob), gc);
  session->input.client = lobby.members[1];
  session->input.engine = std::make_unique<game::Engine>(
      game::Role::Input, game::colors_from_bits(responder->oob), gc);
  lobby.session = std::move(session);

  for (Device* d : {&lobby.session->display, &lobby.session->input}) {
    send(d->client, {{"type", "role"},
                     {"role", game::to_string(d->engine->state().role)},
                     {"lobby", name}});
    report_status(*d, restart ? "SessionRestarted" : "SessionStarted",
                  {{"bits", config_.oob_bits},
                   {"colors", gc.colors},
                   {"flash_ms", config_.flash_ms}});
  }
  flash_pattern(*lobby.session);
}

void Hub::report_status(Device& d, const std::string& event, json extra) {
  const auto& st = d.engine->state();
  json msg = {{"type", "status"},
              {"event", event},
              {"status", game::to_string(st.status)},
              {"counter", st.round_len - 1}};
  if (!extra.is_null()) msg.update(extra);
  send(d.client, msg);
}

void Hub::flash_pattern(Session& s) {
  const auto pattern = s.display.engine->show_pattern();
  for (auto c : pattern)
    send(s.display.client, {{"type", "flash"}, {"color", game::to_string(c)},
                            {"ms", config_.flash_ms}});
  report_status(s.display, "PatternDisplayed", {{"length", pattern.size()}});
  report_status(s.input, "AwaitingInput");
}

void Hub::check_paired(Session& s) {
  if (s.announced_pairing) return;
  if (s.display.engine->state().status != game::Status::Completed ||
      s.input.engine->state().status != game::Status::Completed)
    return;
  s.announced_pairing = true;
  for (Device* d : {&s.display, &s.input}) report_status(*d, "PairingComplete");
}

void Hub::press(ClientId id, Lobby& lobby, const std::string& color) {
  Session& s = *lobby.session;
  if (id != s.input.client) {
    error(id, "press is only accepted from the input device");
    return;
  }
  const auto c = game::parse_color(color);
  if (!c) {
    error(id, "unknown color '" + color + "'");
    return;
  }
  const auto outcome = s.input.engine->press(*c);
  report_status(s.input, std::string(game::to_string(outcome)));
  const auto status = s.input.engine->state().status;
  if (status == game::Status::AbortPrompt)
    report_status(s.input, "AbortPromptShown", {{"message", game::kAbortPrompt}});
  if (status == game::Status::Completed) {
    report_status(s.input, "SessionCompleted");
    check_paired(s);
  }
}

void Hub::control(ClientId id, Lobby& lobby, const std::string& action) {
  Session& s = *lobby.session;
  const std::string name = clients_[id].lobby;
  if (action == "next" || action == "previous") {
    if (id != s.display.client) {
      error(id, action + " is only available on the display device");
      return;
    }
    if (action == "next")
      s.display.engine->next();
    else
      s.display.engine->previous();
    const auto status = s.display.engine->state().status;
    if (status == game::Status::InProgress) {
      flash_pattern(s);
    } else if (status == game::Status::AbortPrompt) {
      report_status(s.display, "AbortPromptShown", {{"message", game::kAbortPrompt}});
    } else if (status == game::Status::Completed) {
      report_status(s.display, "SessionCompleted");
      check_paired(s);
    }
    return;
  }
  if (action == "restart" || action == "cancel") {
    Device& own = id == s.display.client ? s.display : s.input;
    const auto directive = own.engine->resolve(action == "restart"
                                                   ? game::AbortChoice::Restart
                                                   : game::AbortChoice::Cancel);
    if (directive == game::Directive::RestartPairing) {
      lobby.session.reset();
      start_session(name, lobby, true);
    } else {
      end_lobby(name, "SessionAborted", 0);
    }
    return;
  }
  error(id, "unknown control action '" + action + "'");
}

void Hub::end_lobby(const std::string& name, const std::string& event, ClientId except) {
  auto it = lobbies_.find(name);
  if (it == lobbies_.end()) return;
  const std::vector<ClientId> members = it->second.members;
  lobbies_.erase(it);
  for (ClientId m : members) {
    if (auto c = clients_.find(m); c != clients_.end()) c->second.lobby.clear();
    if (m != except) send(m, {{"type", "status"}, {"event", event}, {"lobby", name}});
  }
}

void Hub::disconnect(ClientId id) {
  std::lock_guard lock(mu_);
  auto it = clients_.find(id);
  if (it == clients_.end()) return;
  const std::string lobby = it->second.lobby;
  clients_.erase(it);
  if (!lobby.empty()) end_lobby(lobby, "PeerDisconnected", id);
}

Server::Server(ServiceConfig config)
    : config_(config),
      hub_(config, config.verbose ? std::function<void(const std::string&)>(
                                        [](const std::string& m) {
                                          std::fprintf(stderr, "serve: %s\n", m.c_str());
                                        })
                                  : nullptr) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(config_.port);
  if (inet_pton(AF_INET, config_.host.c_str(), &addr.sin_addr) != 1)
    throw Error(ErrorCode::InvalidInput, "listen host must be an IPv4 address");
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::Io, "socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listen_fd_, 16) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw Error(ErrorCode::Io, "cannot listen on " + config_.host + ":" +
                                   std::to_string(config_.port) + ": " + why);
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Server::~Server() {
  stop();
  std::lock_guard lock(threads_mu_);
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void Server::run() {
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(kPoll.count()));
    if (rc <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    std::lock_guard lock(threads_mu_);
    threads_.emplace_back([this, fd] { serve_client(fd); });
  }
  std::lock_guard lock(threads_mu_);
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

void Server::serve_client(int fd) {
  std::unique_ptr<ws::Connection> conn;
  try {
    conn = ws::Connection::accept_upgrade(fd, std::chrono::seconds(2));
  } catch (const Error&) {
    return;
  }
  if (!conn) return;
  ws::Connection* raw = conn.get();
  const ClientId id = hub_.connect([raw](const json& msg) {
    try {
      raw->send_text(msg.dump());
    } catch (const Error&) {
    }
  });
  while (!stop_) {
    try {
      if (auto text = conn->recv_text(kPoll)) hub_.on_message(id, *text);
    } catch (const Error&) {
      break;
    }
  }
  hub_.disconnect(id);
  conn->close();
}

}  // namespace alicesays::service
