#include "alicesays/model_check.hpp"

#include <unordered_set>
#include <vector>

#include "alicesays/error.hpp"
#include "alicesays/game.hpp"
#include "alicesays/sas.hpp"

namespace alicesays::sim {

namespace {

using game::Color;
using game::ColorString;
using game::GameState;
using game::Status;

constexpr int kMaxModelCheckBits = 8;

ColorString nth_string(std::uint64_t index, int colors) {
  ColorString s(static_cast<std::size_t>(colors));
  for (auto& c : s) {
    c = static_cast<Color>(index % 4);
    index /= 4;
  }
  return s;
}

struct Node {
  GameState display;
  GameState input;
  int used;
  bool contacted;
};

std::uint64_t pack(const GameState& st) {
  return (static_cast<std::uint64_t>(st.committed) << 24) |
         (static_cast<std::uint64_t>(st.round_len) << 16) |
         (static_cast<std::uint64_t>(st.input_pos) << 8) |
         (static_cast<std::uint64_t>(st.single_fail_count) << 4) |
         static_cast<std::uint64_t>(st.status);
}

struct NodeKey {
  std::uint64_t engines;
  std::uint32_t progress;

  bool operator==(const NodeKey&) const = default;
};

struct NodeKeyHash {
  std::size_t operator()(const NodeKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.engines * 31 + k.progress);
  }
};

NodeKey key(const Node& n) {
  return {(pack(n.display) << 32) | pack(n.input),
          (static_cast<std::uint32_t>(n.used) << 1) | (n.contacted ? 1u : 0u)};
}

bool same_progress(const GameState& a, const GameState& b) {
  return a.committed == b.committed && a.round_len == b.round_len &&
         a.single_fail_count == b.single_fail_count && a.status == b.status;
}

class PairExplorer {
 public:
  PairExplorer(const ColorString& display, const ColorString& input,
               const game::GameConfig& cfg, int round_cap, ModelCheckReport& report)
      : display_(display), input_(input), cfg_(cfg), cap_(round_cap), report_(report) {
    for (std::size_t i = 0; i < display.size(); ++i) {
      if (display[i] != input[i]) {
        attacked_ = static_cast<int>(i) + 1;
        break;
      }
    }
  }

  // True when some execution completes.
  bool explore() {
    std::vector<Node> stack{{game::initial_state(game::Role::Display),
                             game::initial_state(game::Role::Input), 0, false}};
    bool completable = false;
    while (!stack.empty()) {
      const Node n = stack.back();
      stack.pop_back();
      if (!seen_.insert(key(n)).second) continue;
      ++report_.states;
      check_state(n);

      if (n.input.status != Status::InProgress) {
        completable |= n.input.status == Status::Completed;
        continue;
      }
      if (n.input.input_pos == 0 && n.used >= cap_) continue;
      if (n.input.input_pos == 0 && n.contacted &&
          n.display.committed != attacked_ - 1)
        ++report_.attacked_first_violations;

      const auto shown = game::current_pattern(n.display, display_);
      const int p = n.input.input_pos;
      if (p >= static_cast<int>(shown.size())) {
        ++report_.desync_states;
        continue;
      }
      const Color displayed = shown[static_cast<std::size_t>(p)];
      const Color expected =
          input_[static_cast<std::size_t>(n.input.committed + p)];
      const int used = p == 0 ? n.used + 1 : n.used;
      for (Color press : game::kAllColors) {
        if (press != displayed && press == expected) continue;  // blind-guess channel
        ++report_.transitions;
        stack.push_back(step(n, press, used));
      }
    }
    return completable;
  }

 private:
  Node step(const Node& n, Color press, int used) {
    const int index = n.input.committed + n.input.input_pos + 1;  // 1-based
    const auto r = game::input_press(n.input, input_, press, cfg_);
    Node next{n.display, r.state, used, n.contacted || index == attacked_};
    if (r.outcome == game::PressOutcome::RoundMatched) {
      next.display = game::advance_round(n.display, cfg_);
    } else if (r.outcome == game::PressOutcome::Mismatch) {
      next.display = game::apply_error(n.display, cfg_);
      if (next.contacted && next.input.status == Status::InProgress &&
          next.input.committed != attacked_ - 1)
        ++report_.attacked_first_violations;
    }
    if (next.input.committed < n.input.committed ||
        next.display.committed < n.display.committed)
      ++report_.monotonicity_violations;
    return next;
  }

  void check_state(const Node& n) {
    if (attacked_ > 0 && (n.input.status == Status::Completed ||
                          n.display.status == Status::Completed))
      ++report_.completed_with_differing_strings;
    if (attacked_ > 0 && n.input.committed >= attacked_)
      ++report_.completed_with_differing_strings;
    if (n.input.input_pos == 0 && !same_progress(n.display, n.input)) ++report_.desync_states;
  }

  const ColorString& display_;
  const ColorString& input_;
  game::GameConfig cfg_;
  int cap_;
  ModelCheckReport& report_;
  int attacked_ = 0;
  std::unordered_set<NodeKey, NodeKeyHash> seen_;
};

}  // namespace

ModelCheckReport model_check(int oob_bits, int abort_threshold, int round_cap) {
  sas::validate_oob_bits(oob_bits);
  if (oob_bits > kMaxModelCheckBits)
    throw Error(ErrorCode::InvalidInput, "model-check: N is limited to " +
                                             std::to_string(kMaxModelCheckBits));
  if (abort_threshold < 1 || abort_threshold > 15 || round_cap < 1)
    throw Error(ErrorCode::InvalidInput,
                "model-check: threshold must be in 1..15 and round cap >= 1");

  ModelCheckReport report;
  report.oob_bits = oob_bits;
  report.abort_threshold = abort_threshold;
  report.round_cap = round_cap;
  const int colors = oob_bits / 2;
  const game::GameConfig cfg{colors, abort_threshold};
  std::uint64_t strings = 1;
  for (int i = 0; i < colors; ++i) strings *= 4;

  for (std::uint64_t d = 0; d < strings; ++d) {
    const ColorString display = nth_string(d, colors);
    for (std::uint64_t i = 0; i < strings; ++i) {
      const ColorString input = nth_string(i, colors);
      ++report.string_pairs;
      PairExplorer explorer(display, input, cfg, round_cap, report);
      const bool completable = explorer.explore();
      if (d == i) {
        ++report.honest_pairs;
        report.honest_pairs_completable += completable;
      }
    }
  }
  return report;
}

}  // namespace alicesays::sim
