#include "alicesays/alicesays.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "alicesays/adversary.hpp"
#include "alicesays/commands.hpp"
#include "alicesays/error.hpp"
#include "alicesays/game.hpp"
#include "alicesays/service.hpp"
#include "alicesays/transport.hpp"

using namespace alicesays;

struct as_game {
  game::Engine engine;
};

struct as_channel {
  channel::TransportPtr transport;
};

struct as_listener {
  std::unique_ptr<channel::SocketListener> listener;
};

struct as_service {
  std::unique_ptr<service::Server> server;
};

namespace {

thread_local std::string g_last_error;

as_status fail(as_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

as_status from_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return AS_ERR_INVALID_INPUT;
    case ErrorCode::InvalidState: return AS_ERR_INVALID_STATE;
    case ErrorCode::InternalInconsistency: return AS_ERR_INTERNAL;
    case ErrorCode::Timeout: return AS_ERR_TIMEOUT;
    case ErrorCode::ClosedPeer: return AS_ERR_CLOSED;
    case ErrorCode::ProtocolAbort: return AS_ERR_PROTOCOL_ABORT;
    case ErrorCode::Io: return AS_ERR_IO;
  }
  return AS_ERR_UNKNOWN;
}

template <typename F>
as_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return AS_OK;
  } catch (const Error& e) {
    return fail(from_code(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(AS_ERR_INVALID_INPUT, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(AS_ERR_UNKNOWN, "out of memory");
  } catch (const std::exception& e) {
    return fail(AS_ERR_UNKNOWN, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool cond, const char* what) {
  if (!cond) throw Error(ErrorCode::InvalidInput, what);
}

nlohmann::json parse_request(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  auto j = nlohmann::json::parse(text);
  require(j.is_object(), "request must be a JSON object");
  return j;
}

using Command = std::string (*)(const nlohmann::json&);

as_status run_command(Command cmd, const char* request, char** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = dup_string(cmd(parse_request(request)));
  });
}

as_game_state to_c(const game::GameState& s) {
  return {s.role == game::Role::Display ? AS_ROLE_DISPLAY : AS_ROLE_INPUT,
          s.committed,
          s.round_len,
          s.input_pos,
          s.single_fail_count,
          static_cast<as_game_status>(s.status)};
}

}  // namespace

extern "C" {

const char* as_status_name(as_status status) {
  switch (status) {
    case AS_OK: return "ok";
    case AS_ERR_INVALID_INPUT: return "invalid-input";
    case AS_ERR_INVALID_STATE: return "invalid-state";
    case AS_ERR_INTERNAL: return "internal-inconsistency";
    case AS_ERR_TIMEOUT: return "timeout";
    case AS_ERR_CLOSED: return "closed-peer";
    case AS_ERR_PROTOCOL_ABORT: return "protocol-abort";
    case AS_ERR_IO: return "io";
    case AS_ERR_UNKNOWN: return "unknown";
  }
  return "unknown";
}

const char* as_last_error(void) { return g_last_error.c_str(); }
const char* as_version(void) { return "1.0.0"; }
void as_string_free(char* s) { std::free(s); }

as_status as_colors_from_bits(const char* bits, uint8_t* colors, size_t capacity,
                              size_t* count) {
  return guarded([&] {
    require(bits && count, "null argument");
    const auto c = game::colors_from_bits(sas::OobString::parse(bits));
    *count = c.size();
    require(colors && capacity >= c.size(), "color buffer too small");
    for (std::size_t i = 0; i < c.size(); ++i) colors[i] = static_cast<uint8_t>(c[i]);
  });
}

as_status as_bits_from_colors(const uint8_t* colors, size_t count, char* bits,
                              size_t capacity) {
  return guarded([&] {
    require(bits && (colors || count == 0), "null argument");
    require(capacity >= 2 * count + 1, "bit buffer too small");
    game::ColorString c;
    for (std::size_t i = 0; i < count; ++i) {
      require(colors[i] < 4, "color value out of range");
      c.push_back(static_cast<game::Color>(colors[i]));
    }
    const std::string s = game::bits_from_colors(c).to_string();
    std::memcpy(bits, s.c_str(), s.size() + 1);
  });
}

as_status as_game_create(as_role role, const uint8_t* colors, size_t count,
                         int abort_threshold, as_game** out) {
  return guarded([&] {
    require(out && colors && count > 0, "null argument or empty color string");
    require(role == AS_ROLE_DISPLAY || role == AS_ROLE_INPUT, "unknown role");
    game::ColorString c;
    for (std::size_t i = 0; i < count; ++i) {
      require(colors[i] < 4, "color value out of range");
      c.push_back(static_cast<game::Color>(colors[i]));
    }
    const game::GameConfig cfg{static_cast<int>(count), abort_threshold};
    *out = new as_game{game::Engine(
        role == AS_ROLE_DISPLAY ? game::Role::Display : game::Role::Input, std::move(c), cfg)};
  });
}

void as_game_destroy(as_game* game) { delete game; }

as_status as_game_get_state(const as_game* g, as_game_state* out) {
  return guarded([&] {
    require(g && out, "null argument");
    *out = to_c(g->engine.state());
  });
}

as_status as_game_pattern(as_game* g, uint8_t* colors, size_t capacity, size_t* count) {
  return guarded([&] {
    require(g && count, "null argument");
    const auto p = g->engine.state().role == game::Role::Display
                       ? g->engine.show_pattern()
                       : std::vector<game::Color>(g->engine.pattern().begin(),
                                                  g->engine.pattern().end());
    *count = p.size();
    require(colors && capacity >= p.size(), "color buffer too small");
    for (std::size_t i = 0; i < p.size(); ++i) colors[i] = static_cast<uint8_t>(p[i]);
  });
}

as_status as_game_press(as_game* g, as_color color, as_press_outcome* outcome) {
  return guarded([&] {
    require(g && outcome, "null argument");
    require(color >= AS_GREEN && color <= AS_YELLOW, "color value out of range");
    *outcome = static_cast<as_press_outcome>(g->engine.press(static_cast<game::Color>(color)));
  });
}

as_status as_game_next(as_game* g) {
  return guarded([&] {
    require(g, "null game");
    g->engine.next();
  });
}

as_status as_game_previous(as_game* g) {
  return guarded([&] {
    require(g, "null game");
    g->engine.previous();
  });
}

as_status as_game_resolve_abort(as_game* g, int restart, int* restart_pairing) {
  return guarded([&] {
    require(g, "null game");
    const auto d = g->engine.resolve(restart ? game::AbortChoice::Restart
                                             : game::AbortChoice::Cancel);
    if (restart_pairing) *restart_pairing = d == game::Directive::RestartPairing;
  });
}

as_status as_game_events_json(const as_game* g, char** out) {
  return guarded([&] {
    require(g && out, "null argument");
    auto arr = commands::Json::array();
    for (const auto& e : g->engine.events()) arr.push_back(commands::to_json(e));
    *out = dup_string(arr.dump());
  });
}

const char* as_abort_prompt(void) {
  static const std::string kPrompt(game::kAbortPrompt);
  return kPrompt.c_str();
}

as_status as_channel_memory_pair(as_channel** a, as_channel** b) {
  return guarded([&] {
    require(a && b, "null argument");
    auto [x, y] = channel::make_memory_pair();
    auto* ca = new as_channel{std::move(x)};
    *b = new as_channel{std::move(y)};
    *a = ca;
  });
}

as_status as_channel_connect(const char* host, uint16_t port, int timeout_ms,
                             as_channel** out) {
  return guarded([&] {
    require(host && out, "null argument");
    *out = new as_channel{
        channel::SocketTransport::connect(host, port, channel::Millis(timeout_ms))};
  });
}

as_status as_listener_create(const char* host, uint16_t port, as_listener** out) {
  return guarded([&] {
    require(host && out, "null argument");
    *out = new as_listener{std::make_unique<channel::SocketListener>(host, port)};
  });
}

uint16_t as_listener_port(const as_listener* l) { return l ? l->listener->port() : 0; }

as_status as_listener_accept(as_listener* l, int timeout_ms, as_channel** out) {
  return guarded([&] {
    require(l && out, "null argument");
    *out = new as_channel{l->listener->accept(channel::Millis(timeout_ms))};
  });
}

void as_listener_destroy(as_listener* l) { delete l; }

as_status as_channel_interpose(as_channel* inner, const char* policy_json, as_channel** out) {
  std::unique_ptr<as_channel> owned(inner);
  return guarded([&] {
    require(owned && out, "null argument");
    const auto j = parse_request(policy_json);
    const std::string mode = j.value("mode", "passive");
    channel::AdversaryPolicy policy;
    if (mode == "passive") {
      policy = channel::AdversaryPolicy::passive();
    } else if (mode == "mitm") {
      policy = channel::AdversaryPolicy::mitm(j.value("seed", std::uint64_t{0}));
    } else if (mode == "corrupt") {
      std::vector<channel::BitFlip> flips;
      for (const auto& f : j.value("flips", nlohmann::json::array()))
        flips.push_back({f.at(0).get<std::uint32_t>(), f.at(1).get<std::uint32_t>()});
      policy = channel::AdversaryPolicy::corrupt(std::move(flips));
    } else if (mode == "drop") {
      policy = channel::AdversaryPolicy::drop(
          j.value("drops", std::vector<std::uint32_t>{}));
    } else {
      throw Error(ErrorCode::InvalidInput, "unknown adversary mode '" + mode + "'");
    }
    *out = new as_channel{channel::interpose(policy, std::move(owned->transport))};
  });
}

void as_channel_destroy(as_channel* c) { delete c; }

as_status as_pair(as_channel* c, as_pairing_role role, int oob_bits, int timeout_ms,
                  as_pairing_result* out) {
  return guarded([&] {
    require(c && out, "null argument");
    sas::PairingConfig cfg;
    cfg.oob_bits = oob_bits;
    cfg.timeout = std::chrono::milliseconds(timeout_ms);
    const auto r = sas::run_pairing(
        role == AS_INITIATOR ? sas::PairingRole::Initiator : sas::PairingRole::Responder,
        *c->transport, cfg);
    std::memcpy(out->session_key, r.session_key.data(), sizeof out->session_key);
    out->oob_bits = static_cast<int>(r.oob.size());
    const std::string s = r.oob.to_string();
    std::memcpy(out->oob, s.c_str(), s.size() + 1);
  });
}

as_status as_simulate(const char* req, char** out) {
  return run_command(&commands::simulate, req, out);
}
as_status as_attack(const char* req, char** out) {
  return run_command(&commands::attack, req, out);
}
as_status as_oracle(const char* req, char** out) {
  return run_command(&commands::oracle, req, out);
}
as_status as_model_check(const char* req, char** out) {
  return run_command(&commands::model_check, req, out);
}
as_status as_calibrate(const char* req, char** out) {
  return run_command(&commands::calibrate, req, out);
}
as_status as_demo_trace(const char* req, char** out) {
  return run_command(&commands::demo_trace, req, out);
}

as_status as_service_create(const char* config_json, as_service** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new as_service{std::make_unique<service::Server>(
        service::ServiceConfig::from_json(parse_request(config_json)))};
  });
}

uint16_t as_service_port(const as_service* s) { return s ? s->server->port() : 0; }

as_status as_service_run(as_service* s) {
  return guarded([&] {
    require(s != nullptr, "null service");
    s->server->run();
  });
}

void as_service_stop(as_service* s) {
  if (s) s->server->stop();
}

void as_service_destroy(as_service* s) { delete s; }

}  // extern "C"
