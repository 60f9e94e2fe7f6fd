#include "alicesays/oracle.hpp"

#include <unordered_map>

#include "alicesays/error.hpp"
#include "alicesays/game.hpp"
#include "alicesays/sas.hpp"

namespace alicesays::sim {

namespace {

struct Outcome {
  double complete = 0, abort = 0, capped = 0;
};

class GuesserOracle {
 public:
  GuesserOracle(int colors, int threshold, int round_cap)
      : target_(static_cast<std::size_t>(colors), game::Color::Green),
        cfg_{colors, threshold},
        cap_(round_cap) {}

  Outcome from_start() { return begin_round(game::initial_state(game::Role::Input), 0); }
  std::size_t states() const { return memo_.size(); }

  double per_press_success() const {
    const auto st = game::initial_state(game::Role::Input);
    int hits = 0;
    for (auto c : game::kAllColors)
      hits += game::input_press(st, target_, c, cfg_).outcome != game::PressOutcome::Mismatch;
    return hits / 4.0;
  }

 private:
  Outcome begin_round(const game::GameState& st, int used) {
    if (st.status == game::Status::Completed) return {1, 0, 0};
    if (st.status == game::Status::AbortPrompt) return {0, 1, 0};
    if (used >= cap_) return {0, 0, 1};
    return mid_round(st, used + 1);
  }

  // Every press sequence from here, each color with probability 1/4.
  Outcome mid_round(const game::GameState& st, int used) {
    const std::uint64_t key = (static_cast<std::uint64_t>(used) << 40) |
                              (static_cast<std::uint64_t>(st.committed) << 24) |
                              (static_cast<std::uint64_t>(st.round_len) << 16) |
                              (static_cast<std::uint64_t>(st.input_pos) << 8) |
                              static_cast<std::uint64_t>(st.single_fail_count);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Outcome sum;
    for (auto c : game::kAllColors) {
      const auto r = game::input_press(st, target_, c, cfg_);
      const Outcome o = r.outcome == game::PressOutcome::Partial ? mid_round(r.state, used)
                                                                 : begin_round(r.state, used);
      sum.complete += o.complete / 4;
      sum.abort += o.abort / 4;
      sum.capped += o.capped / 4;
    }
    memo_.emplace(key, sum);
    return sum;
  }

  game::ColorString target_;
  game::GameConfig cfg_;
  int cap_;
  std::unordered_map<std::uint64_t, Outcome> memo_;
};

}  // namespace

OracleResult guesser_oracle(int oob_bits, int abort_threshold, int round_cap) {
  sas::validate_oob_bits(oob_bits);
  if (oob_bits > kOracleMaxBits)
    throw Error(ErrorCode::InvalidInput, "oracle: exhaustive enumeration is limited to N <= " +
                                             std::to_string(kOracleMaxBits));
  if (abort_threshold < 1 || round_cap < 1)
    throw Error(ErrorCode::InvalidInput, "oracle: threshold and round cap must be >= 1");
  // A blind guesser's odds do not depend on the string, so one string stands
  // for all of them.
  GuesserOracle oracle(oob_bits / 2, abort_threshold, round_cap);
  const Outcome o = oracle.from_start();
  return {o.complete, o.abort, o.capped, oracle.per_press_success(), oracle.states()};
}

}  // namespace alicesays::sim
