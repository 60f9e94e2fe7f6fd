#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "alicesays/bytes.hpp"

namespace alicesays::channel {

enum class MsgType : std::uint8_t {
  Commit = 1,
  Respond = 2,
  Open = 3,
  Control = 4,
};

std::optional<MsgType> parse_msg_type(std::uint8_t raw) noexcept;
const char* to_string(MsgType t) noexcept;

struct Frame {
  MsgType type = MsgType::Control;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

// Wire layout: 1-byte msg_type, 4-byte big-endian payload length, payload.
inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::uint32_t kMaxPayload = 1u << 20;

Bytes encode(const Frame& f);

/// Decodes exactly one frame occupying all of `wire`.
Frame decode(std::span<const std::uint8_t> wire);

struct FrameHeader {
  MsgType type;
  std::uint32_t length;
};

FrameHeader decode_header(std::span<const std::uint8_t, kHeaderSize> header);

/// Control frames carry lobby bookkeeping only. The payload is a JSON object
/// restricted to the keys below; anything resembling a game position or
/// pattern index is rejected.
struct ControlMessage {
  std::string kind;  // join | ready | leave | ping
  std::string lobby;
  std::string note;

  bool operator==(const ControlMessage&) const = default;
};

Frame make_control(const ControlMessage& msg);
ControlMessage parse_control(const Frame& f);

}  // namespace alicesays::channel
