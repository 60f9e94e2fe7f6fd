#include "alicesays/game.hpp"

#include <string>

#include "alicesays/error.hpp"

namespace alicesays::game {

namespace {

[[noreturn]] void invalid_state(const std::string& why) {
  throw Error(ErrorCode::InvalidState, "game: " + why);
}

void require_in_progress(const GameState& st, const char* action) {
  if (st.status != Status::InProgress)
    invalid_state(std::string(action) + " while " + std::string(to_string(st.status)));
}

void check_bounds(const GameState& st, std::size_t colors) {
  if (st.committed < 0 || st.round_len < 1 ||
      static_cast<std::size_t>(st.committed + st.round_len) > colors)
    throw Error(ErrorCode::InternalInconsistency,
                "game: round covers colors " + std::to_string(st.committed + 1) + ".." +
                    std::to_string(st.committed + st.round_len) + " of " +
                    std::to_string(colors));
}

}  // namespace

std::string_view to_string(Color c) noexcept {
  switch (c) {
    case Color::Green: return "green";
    case Color::Red: return "red";
    case Color::Blue: return "blue";
    case Color::Yellow: return "yellow";
  }
  return "?";
}

std::optional<Color> parse_color(std::string_view name) noexcept {
  for (Color c : kAllColors)
    if (to_string(c) == name) return c;
  return std::nullopt;
}

std::string_view to_string(Role r) noexcept {
  return r == Role::Display ? "display" : "input";
}

std::string_view to_string(Status s) noexcept {
  switch (s) {
    case Status::InProgress: return "InProgress";
    case Status::AbortPrompt: return "AbortPrompt";
    case Status::Aborted: return "Aborted";
    case Status::Completed: return "Completed";
  }
  return "?";
}

std::string_view to_string(PressOutcome o) noexcept {
  switch (o) {
    case PressOutcome::Partial: return "Partial";
    case PressOutcome::RoundMatched: return "RoundMatched";
    case PressOutcome::Mismatch: return "Mismatch";
  }
  return "?";
}

std::string_view to_string(GameEvent::Kind k) noexcept {
  using K = GameEvent::Kind;
  switch (k) {
    case K::PatternDisplayed: return "PatternDisplayed";
    case K::ColorPressed: return "ColorPressed";
    case K::RoundMatched: return "RoundMatched";
    case K::Mismatch: return "Mismatch";
    case K::AdvancePressed: return "AdvancePressed";
    case K::PreviousPressed: return "PreviousPressed";
    case K::AbortPromptShown: return "AbortPromptShown";
    case K::SessionCompleted: return "SessionCompleted";
  }
  return "?";
}

std::string_view to_string(MutualOutcome o) noexcept {
  switch (o) {
    case MutualOutcome::MutuallyAuthenticated: return "MutuallyAuthenticated";
    case MutualOutcome::FirstDirectionFailed: return "FirstDirectionFailed";
    case MutualOutcome::SecondDirectionFailed: return "SecondDirectionFailed";
  }
  return "?";
}

ColorString colors_from_bits(const sas::OobString& bits) {
  if (bits.size() % 2 != 0)
    throw Error(ErrorCode::InvalidInput, "game: OOB string has odd length " +
                                             std::to_string(bits.size()));
  ColorString out;
  out.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2)
    out.push_back(static_cast<Color>((bits[i] ? 2 : 0) | (bits[i + 1] ? 1 : 0)));
  return out;
}

sas::OobString bits_from_colors(std::span<const Color> colors) {
  std::vector<bool> bits;
  bits.reserve(colors.size() * 2);
  for (Color c : colors) {
    const auto v = static_cast<unsigned>(c);
    bits.push_back((v & 2u) != 0);
    bits.push_back((v & 1u) != 0);
  }
  return sas::OobString(std::move(bits));
}

void GameConfig::validate() const {
  if (colors < 1) throw Error(ErrorCode::InvalidInput, "game: need at least one color");
  if (abort_threshold < 1)
    throw Error(ErrorCode::InvalidInput, "game: abort threshold must be >= 1");
}

GameState initial_state(Role role) {
  GameState st;
  st.role = role;
  return st;
}

std::span<const Color> current_pattern(const GameState& st,
                                       std::span<const Color> colors) {
  require_in_progress(st, "pattern requested");
  check_bounds(st, colors.size());
  return colors.subspan(static_cast<std::size_t>(st.committed),
                        static_cast<std::size_t>(st.round_len));
}

bool check_complete(const GameState& st, int colors) noexcept {
  return st.committed + st.round_len == colors;
}

GameState apply_error(const GameState& st, const GameConfig& cfg) {
  require_in_progress(st, "error applied");
  GameState next = st;
  next.committed = st.committed + st.round_len - 1;
  next.single_fail_count = st.round_len == 1 ? st.single_fail_count + 1 : 0;
  next.round_len = 1;
  next.input_pos = 0;
  if (next.single_fail_count >= cfg.abort_threshold) {
    next.single_fail_count = cfg.abort_threshold;
    next.status = Status::AbortPrompt;
  }
  return next;
}

PressResult input_press(const GameState& st, std::span<const Color> colors, Color press,
                        const GameConfig& cfg) {
  if (st.role != Role::Input) invalid_state("press on the display device");
  require_in_progress(st, "press");
  check_bounds(st, colors.size());
  const int position = st.input_pos;
  if (colors[static_cast<std::size_t>(st.committed + position)] != press)
    return {apply_error(st, cfg), PressOutcome::Mismatch, position};

  GameState next = st;
  next.input_pos = position + 1;
  if (next.input_pos < st.round_len) return {next, PressOutcome::Partial, position};

  next.input_pos = 0;
  next.single_fail_count = 0;
  if (check_complete(st, static_cast<int>(colors.size()))) {
    next.status = Status::Completed;
  } else {
    next.round_len = st.round_len + 1;
  }
  return {next, PressOutcome::RoundMatched, position};
}

GameState advance_round(const GameState& st, const GameConfig& cfg) {
  if (st.role != Role::Display) invalid_state("next pressed on the input device");
  require_in_progress(st, "next");
  GameState next = st;
  next.single_fail_count = 0;
  if (check_complete(st, cfg.colors)) {
    next.status = Status::Completed;
    return next;
  }
  next.round_len = std::min(st.round_len + 1, cfg.colors - st.committed);
  return next;
}

AbortResolution resolve_abort(const GameState& st, AbortChoice choice) {
  if (st.status != Status::AbortPrompt)
    invalid_state("abort resolved while " + std::string(to_string(st.status)));
  GameState next = st;
  next.status = Status::Aborted;
  return {next, choice == AbortChoice::Restart ? Directive::RestartPairing
                                               : Directive::Cancelled};
}

Engine::Engine(Role role, ColorString colors, GameConfig cfg)
    : colors_(std::move(colors)), cfg_(cfg), state_(initial_state(role)) {
  cfg_.validate();
  if (static_cast<int>(colors_.size()) != cfg_.colors)
    throw Error(ErrorCode::InvalidInput, "game: color string length " +
                                             std::to_string(colors_.size()) +
                                             " does not match configuration " +
                                             std::to_string(cfg_.colors));
}

void Engine::require(Role role, const char* action) const {
  if (state_.role != role)
    invalid_state(std::string(action) + " is not available on the " +
                  std::string(to_string(state_.role)) + " device");
}

void Engine::emit(GameEvent ev) {
  log_.push_back({log_.size(), state_.role, std::move(ev), state_.committed,
                  state_.round_len, state_.status});
}

void Engine::after_error() {
  if (state_.status == Status::AbortPrompt) emit({GameEvent::Kind::AbortPromptShown});
}

std::span<const Color> Engine::pattern() const {
  return current_pattern(state_, colors_);
}

std::vector<Color> Engine::show_pattern() {
  require(Role::Display, "showing a pattern");
  auto p = pattern();
  std::vector<Color> slice(p.begin(), p.end());
  GameEvent ev{GameEvent::Kind::PatternDisplayed};
  ev.slice = slice;
  emit(std::move(ev));
  return slice;
}

PressOutcome Engine::press(Color c) {
  require(Role::Input, "pressing a color");
  const PressResult r = input_press(state_, colors_, c, cfg_);
  GameEvent pressed{GameEvent::Kind::ColorPressed};
  pressed.color = c;
  emit(std::move(pressed));
  state_ = r.state;
  switch (r.outcome) {
    case PressOutcome::Partial:
      break;
    case PressOutcome::RoundMatched:
      emit({GameEvent::Kind::RoundMatched});
      if (state_.status == Status::Completed) emit({GameEvent::Kind::SessionCompleted});
      break;
    case PressOutcome::Mismatch: {
      GameEvent m{GameEvent::Kind::Mismatch};
      m.position = r.position;
      emit(std::move(m));
      after_error();
      break;
    }
  }
  return r.outcome;
}

void Engine::next() {
  require(Role::Display, "next");
  state_ = advance_round(state_, cfg_);
  emit({GameEvent::Kind::AdvancePressed});
  if (state_.status == Status::Completed) emit({GameEvent::Kind::SessionCompleted});
}

void Engine::previous() {
  require(Role::Display, "previous");
  state_ = apply_error(state_, cfg_);
  emit({GameEvent::Kind::PreviousPressed});
  after_error();
}

Directive Engine::resolve(AbortChoice choice) {
  const AbortResolution r = resolve_abort(state_, choice);
  state_ = r.state;
  return r.directive;
}

MutualResult mutual_session(const std::function<DirectedResult(int)>& play) {
  MutualResult out{MutualOutcome::FirstDirectionFailed, {}, 0};
  for (int direction = 0; direction < 2; ++direction) {
    const DirectedResult r = play(direction);
    out.directions.push_back(r);
    out.total_rounds += r.rounds;
    if (!r.completed) {
      out.outcome = direction == 0 ? MutualOutcome::FirstDirectionFailed
                                   : MutualOutcome::SecondDirectionFailed;
      return out;
    }
  }
  out.outcome = MutualOutcome::MutuallyAuthenticated;
  return out;
}

}  // namespace alicesays::game
