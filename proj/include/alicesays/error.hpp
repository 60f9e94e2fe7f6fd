#pragma once

#include <stdexcept>
#include <string>

namespace alicesays {

// Numeric values are shared with the C API status codes.
enum class ErrorCode : int {
  InvalidInput = 1,
  InvalidState = 2,
  InternalInconsistency = 3,
  Timeout = 4,
  ClosedPeer = 5,
  ProtocolAbort = 6,
  Io = 7,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace alicesays
