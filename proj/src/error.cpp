#include "alicesays/bytes.hpp"
#include "alicesays/error.hpp"

namespace alicesays {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::InternalInconsistency: return "internal-inconsistency";
    case ErrorCode::Timeout: return "timeout";
    case ErrorCode::ClosedPeer: return "closed-peer";
    case ErrorCode::ProtocolAbort: return "protocol-abort";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

}  // namespace alicesays
