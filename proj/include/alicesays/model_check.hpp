#pragma once

#include <cstdint>

namespace alicesays::sim {

struct ModelCheckReport {
  int oob_bits = 0;
  int abort_threshold = 0;
  int round_cap = 0;
  std::uint64_t string_pairs = 0;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t completed_with_differing_strings = 0;
  std::uint64_t monotonicity_violations = 0;
  std::uint64_t attacked_first_violations = 0;
  std::uint64_t desync_states = 0;
  std::uint64_t honest_pairs_completable = 0;
  std::uint64_t honest_pairs = 0;

  bool ok() const noexcept {
    return completed_with_differing_strings == 0 &&
           monotonicity_violations == 0 && attacked_first_violations == 0 &&
           desync_states == 0 && honest_pairs_completable == honest_pairs;
  }
};

/// Explores every display/input string pair of length N/2 and every press
/// sequence up to round_cap rounds. The display human follows the input
/// device's verdict (next on a match, previous on a mismatch). A press that
/// departs from the displayed color but happens to equal the input device's
/// own color is the blind-guess channel and is excluded here.
ModelCheckReport model_check(int oob_bits, int abort_threshold, int round_cap);

}  // namespace alicesays::sim
