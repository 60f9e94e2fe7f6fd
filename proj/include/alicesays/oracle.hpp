#pragma once

#include <cstdint>

namespace alicesays::sim {

inline constexpr int kOracleMaxBits = 8;

struct OracleResult {
  double completion = 0;
  double abort = 0;
  double capped = 0;
  double per_press_success = 0;  // probability that one uniform press matches
  std::uint64_t states = 0;      // distinct memoized states
};

/// Exact outcome distribution for a user pressing uniformly random colors,
/// by enumeration of every press sequence (memoized on engine state and
/// rounds used). Throws InvalidInput when oob_bits exceeds kOracleMaxBits.
OracleResult guesser_oracle(int oob_bits, int abort_threshold, int round_cap);

}  // namespace alicesays::sim
