#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "alicesays/sas.hpp"

namespace alicesays::game {

// Two OOB bits per color: 00 green, 01 red, 10 blue, 11 yellow.
enum class Color : std::uint8_t { Green = 0, Red = 1, Blue = 2, Yellow = 3 };

inline constexpr std::array<Color, 4> kAllColors = {Color::Green, Color::Red,
                                                    Color::Blue, Color::Yellow};

std::string_view to_string(Color c) noexcept;
std::optional<Color> parse_color(std::string_view name) noexcept;

using ColorString = std::vector<Color>;

/// Throws InvalidInput on odd length.
ColorString colors_from_bits(const sas::OobString& bits);
sas::OobString bits_from_colors(std::span<const Color> colors);

enum class Role : std::uint8_t { Display, Input };
enum class Status : std::uint8_t { InProgress, AbortPrompt, Aborted, Completed };

std::string_view to_string(Role r) noexcept;
std::string_view to_string(Status s) noexcept;

inline constexpr int kDefaultAbortThreshold = 2;

inline constexpr std::string_view kAbortPrompt =
    "It seems that something has gone wrong. Would you like to restart the "
    "session? [Y/N]";

struct GameConfig {
  int colors = 15;
  int abort_threshold = kDefaultAbortThreshold;

  void validate() const;
};

/// committed: colors already verified (s). round_len: length of the pattern
/// being played (r). input_pos: presses accepted in this round (input role).
/// single_fail_count: consecutive failed rounds of length one.
struct GameState {
  Role role = Role::Display;
  int committed = 0;
  int round_len = 1;
  int input_pos = 0;
  int single_fail_count = 0;
  Status status = Status::InProgress;

  bool operator==(const GameState&) const = default;
};

GameState initial_state(Role role);

/// Colors s+1 .. s+r. Throws InvalidState unless InProgress and
/// InternalInconsistency when the round runs past the string.
std::span<const Color> current_pattern(const GameState& st,
                                       std::span<const Color> colors);

enum class PressOutcome : std::uint8_t { Partial, RoundMatched, Mismatch };
std::string_view to_string(PressOutcome o) noexcept;

struct PressResult {
  GameState state;
  PressOutcome outcome;
  int position;  // index of the press within the round
};

/// Input role only. A matched final press either completes the game or grows
/// the round; a mismatch restarts via apply_error.
PressResult input_press(const GameState& st, std::span<const Color> colors,
                        Color press, const GameConfig& cfg);

/// s' = s + r - 1, r' = 1. Counts consecutive single-color failures and raises
/// the abort prompt at the threshold.
GameState apply_error(const GameState& st, const GameConfig& cfg);

/// Display role "next". Completion takes precedence over growth.
GameState advance_round(const GameState& st, const GameConfig& cfg);

bool check_complete(const GameState& st, int colors) noexcept;

enum class AbortChoice : std::uint8_t { Restart, Cancel };
enum class Directive : std::uint8_t { RestartPairing, Cancelled };

struct AbortResolution {
  GameState state;
  Directive directive;
};

/// Restart leaves the game Aborted and asks the caller to discard keys and
/// pair again; cancel simply ends it.
AbortResolution resolve_abort(const GameState& st, AbortChoice choice);

struct GameEvent {
  enum class Kind : std::uint8_t {
    PatternDisplayed,
    ColorPressed,
    RoundMatched,
    Mismatch,
    AdvancePressed,
    PreviousPressed,
    AbortPromptShown,
    SessionCompleted,
  };

  Kind kind = Kind::PatternDisplayed;
  GameEvent() = default;
  GameEvent(Kind k) : kind(k) {}
  std::vector<Color> slice;  // PatternDisplayed
  Color color = Color::Green;  // ColorPressed
  int position = 0;          // Mismatch
};

std::string_view to_string(GameEvent::Kind k) noexcept;

struct EventRecord {
  std::uint64_t seq;
  Role role;
  GameEvent event;
  int committed;
  int round_len;
  Status status;
};

/// Stateful convenience around the pure transitions, with an event log.
/// Holds no channel; the only inputs are human actions.
class Engine {
 public:
  Engine(Role role, ColorString colors, GameConfig cfg);

  const GameState& state() const noexcept { return state_; }
  const GameConfig& config() const noexcept { return cfg_; }
  const ColorString& colors() const noexcept { return colors_; }
  const std::vector<EventRecord>& events() const noexcept { return log_; }

  /// Current pattern; logs PatternDisplayed.
  std::vector<Color> show_pattern();
  std::span<const Color> pattern() const;

  PressOutcome press(Color c);  // input role
  void next();                  // display role
  void previous();              // display role
  Directive resolve(AbortChoice choice);

 private:
  void require(Role role, const char* action) const;
  void emit(GameEvent ev);
  void after_error();

  ColorString colors_;
  GameConfig cfg_;
  GameState state_;
  std::vector<EventRecord> log_;
};

struct DirectedResult {
  bool completed = false;
  int rounds = 0;
};

enum class MutualOutcome : std::uint8_t {
  MutuallyAuthenticated,
  FirstDirectionFailed,
  SecondDirectionFailed,
};

std::string_view to_string(MutualOutcome o) noexcept;

struct MutualResult {
  MutualOutcome outcome;
  std::vector<DirectedResult> directions;
  int total_rounds = 0;
};

/// Direction 0: device A displays, B inputs. Direction 1 swaps roles over the
/// same OOB string. A failed first direction skips the second.
MutualResult mutual_session(
    const std::function<DirectedResult(int direction)>& play);

}  // namespace alicesays::game
