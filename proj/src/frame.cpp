#include "alicesays/frame.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>

#include "alicesays/error.hpp"

namespace alicesays::channel {

namespace {

constexpr std::array<std::string_view, 4> kControlKinds = {"join", "ready",
                                                           "leave", "ping"};
constexpr std::array<std::string_view, 4> kControlKeys = {"kind", "lobby", "note",
                                                          "schema_version"};
constexpr std::size_t kMaxControlString = 64;

[[noreturn]] void reject(const std::string& why) {
  throw Error(ErrorCode::InvalidInput, "frame: " + why);
}

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& set, std::string_view v) {
  return std::find(set.begin(), set.end(), v) != set.end();
}

void check_control_text(const std::string& field, const std::string& value) {
  if (value.size() > kMaxControlString) reject("control " + field + " too long");
  // Digits would let a lobby name smuggle positions; names are letters and
  // dashes only.
  for (char ch : value) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    ch == '-' || ch == '_' || ch == ' ';
    if (!ok) reject("control " + field + " has disallowed character");
  }
}

ControlMessage validate_control(std::span<const std::uint8_t> payload) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(payload.begin(), payload.end());
  } catch (const nlohmann::json::exception&) {
    reject("control payload is not JSON");
  }
  if (!j.is_object()) reject("control payload must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!contains(kControlKeys, key)) reject("control key '" + key + "' not allowed");
    if (key == "schema_version") {
      if (!value.is_number_integer() || value.get<int>() != 1)
        reject("control schema_version must be 1");
    } else if (!value.is_string()) {
      reject("control field '" + key + "' must be a string");
    }
  }
  if (!j.contains("kind")) reject("control kind missing");
  ControlMessage m;
  m.kind = j["kind"].get<std::string>();
  if (!contains(kControlKinds, m.kind)) reject("unknown control kind '" + m.kind + "'");
  m.lobby = j.value("lobby", "");
  m.note = j.value("note", "");
  check_control_text("lobby", m.lobby);
  check_control_text("note", m.note);
  return m;
}

}  // namespace

std::optional<MsgType> parse_msg_type(std::uint8_t raw) noexcept {
  if (raw >= 1 && raw <= 4) return static_cast<MsgType>(raw);
  return std::nullopt;
}

const char* to_string(MsgType t) noexcept {
  switch (t) {
    case MsgType::Commit: return "commit";
    case MsgType::Respond: return "respond";
    case MsgType::Open: return "open";
    case MsgType::Control: return "control";
  }
  return "unknown";
}

Bytes encode(const Frame& f) {
  if (f.payload.size() > kMaxPayload) reject("payload too large");
  const auto len = static_cast<std::uint32_t>(f.payload.size());
  Bytes out;
  out.reserve(kHeaderSize + len);
  out.push_back(static_cast<std::uint8_t>(f.type));
  out.push_back(static_cast<std::uint8_t>(len >> 24));
  out.push_back(static_cast<std::uint8_t>(len >> 16));
  out.push_back(static_cast<std::uint8_t>(len >> 8));
  out.push_back(static_cast<std::uint8_t>(len));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

FrameHeader decode_header(std::span<const std::uint8_t, kHeaderSize> h) {
  auto type = parse_msg_type(h[0]);
  if (!type) reject("unknown msg_type " + std::to_string(h[0]));
  const std::uint32_t len = (std::uint32_t{h[1]} << 24) | (std::uint32_t{h[2]} << 16) |
                            (std::uint32_t{h[3]} << 8) | std::uint32_t{h[4]};
  if (len > kMaxPayload) reject("declared length exceeds limit");
  return {*type, len};
}

Frame decode(std::span<const std::uint8_t> wire) {
  if (wire.size() < kHeaderSize) reject("truncated header");
  const auto h = decode_header(wire.first<kHeaderSize>());
  if (wire.size() - kHeaderSize != h.length) reject("length mismatch");
  Frame f{h.type, Bytes(wire.begin() + kHeaderSize, wire.end())};
  if (f.type == MsgType::Control) validate_control(f.payload);
  return f;
}

Frame make_control(const ControlMessage& msg) {
  nlohmann::json j = {{"schema_version", 1}, {"kind", msg.kind}};
  if (!msg.lobby.empty()) j["lobby"] = msg.lobby;
  if (!msg.note.empty()) j["note"] = msg.note;
  const std::string text = j.dump();
  Frame f{MsgType::Control, Bytes(text.begin(), text.end())};
  validate_control(f.payload);
  return f;
}

ControlMessage parse_control(const Frame& f) {
  if (f.type != MsgType::Control) reject("not a control frame");
  return validate_control(f.payload);
}

}  // namespace alicesays::channel
