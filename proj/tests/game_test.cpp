#include <doctest.h>

#include "alicesays/error.hpp"
#include "alicesays/game.hpp"

using namespace alicesays;
using namespace alicesays::game;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

GameState at(Role role, int s, int r, int f = 0) {
  GameState st = initial_state(role);
  st.committed = s;
  st.round_len = r;
  st.single_fail_count = f;
  return st;
}

ColorString sample(int n) {
  ColorString c;
  for (int i = 0; i < n; ++i) c.push_back(kAllColors[(i * 7 + 3) % 4]);
  return c;
}

Color other(Color c) { return static_cast<Color>((static_cast<int>(c) + 1) % 4); }

}  // namespace

TEST_CASE("bit pairs map to colors in quadrant order") {
  CHECK(colors_from_bits(sas::OobString::parse("00011011")) ==
        ColorString{Color::Green, Color::Red, Color::Blue, Color::Yellow});
  CHECK(bits_from_colors(ColorString{Color::Yellow}).to_string() == "11");
  CHECK(bits_from_colors(ColorString{}).size() == 0);
  CHECK(colors_from_bits(sas::OobString(std::vector<bool>(30))).size() == 15);
  CHECK(code_of([] { colors_from_bits(sas::OobString::parse("010")); }) ==
        ErrorCode::InvalidInput);
}

TEST_CASE("every three-color string survives a bit round trip") {
  for (int v = 0; v < 64; ++v) {
    const ColorString c{static_cast<Color>(v & 3), static_cast<Color>((v >> 2) & 3),
                        static_cast<Color>((v >> 4) & 3)};
    CHECK(colors_from_bits(bits_from_colors(c)) == c);
  }
}

TEST_CASE("color names parse case-sensitively") {
  for (Color c : kAllColors) CHECK(parse_color(to_string(c)) == c);
  CHECK_FALSE(parse_color("purple").has_value());
}

TEST_CASE("current pattern slices s+1 .. s+r") {
  const ColorString c = sample(15);
  CHECK(current_pattern(at(Role::Display, 0, 1), c).size() == 1);
  CHECK(current_pattern(at(Role::Display, 0, 1), c)[0] == c[0]);
  const auto sixth = current_pattern(at(Role::Display, 5, 1), c);
  REQUIRE(sixth.size() == 1);
  CHECK(sixth[0] == c[5]);
  const auto three = current_pattern(at(Role::Display, 0, 3), c);
  CHECK(ColorString(three.begin(), three.end()) == ColorString(c.begin(), c.begin() + 3));
  CHECK(code_of([&] { current_pattern(at(Role::Display, 12, 4), c); }) ==
        ErrorCode::InternalInconsistency);
}

TEST_CASE("input presses match, grow and mismatch") {
  const ColorString c = sample(15);
  const GameConfig cfg{15, 2};
  auto st = at(Role::Input, 0, 2);
  auto r = input_press(st, c, c[0], cfg);
  CHECK(r.outcome == PressOutcome::Partial);
  r = input_press(r.state, c, c[1], cfg);
  CHECK(r.outcome == PressOutcome::RoundMatched);
  CHECK(r.state.round_len == 3);
  CHECK(r.state.committed == 0);

  for (int p = 0; p < 3; ++p) {
    GameState s = r.state;
    for (int k = 0; k < p; ++k) s = input_press(s, c, c[k], cfg).state;
    const auto m = input_press(s, c, other(c[p]), cfg);
    CHECK(m.outcome == PressOutcome::Mismatch);
    CHECK(m.position == p);
    CHECK(m.state.committed == 2);
    CHECK(m.state.round_len == 1);
  }
  CHECK(code_of([&] { input_press(at(Role::Display, 0, 1), c, c[0], cfg); }) ==
        ErrorCode::InvalidState);
}

TEST_CASE("errors restart at the last fully matched round") {
  const GameConfig cfg{15, 2};
  CHECK(apply_error(at(Role::Input, 0, 6), cfg) == at(Role::Input, 5, 1));
  CHECK(apply_error(at(Role::Input, 5, 6), cfg) == at(Role::Input, 10, 1));
  const auto prompt = apply_error(at(Role::Input, 7, 1, 1), cfg);
  CHECK(prompt.single_fail_count == 2);
  CHECK(prompt.status == Status::AbortPrompt);
  CHECK(prompt.committed == 7);
}

TEST_CASE("advance grows the round and completion wins at the end") {
  const GameConfig cfg{15, 2};
  CHECK(advance_round(at(Role::Display, 0, 1), cfg) == at(Role::Display, 0, 2));
  const auto done = advance_round(at(Role::Display, 10, 5), cfg);
  CHECK(done.status == Status::Completed);
  CHECK(done.round_len == 5);
  auto prompt = at(Role::Display, 3, 1, 2);
  prompt.status = Status::AbortPrompt;
  CHECK(code_of([&] { advance_round(prompt, cfg); }) == ErrorCode::InvalidState);
}

TEST_CASE("completion check") {
  CHECK(check_complete(at(Role::Input, 10, 5), 15));
  CHECK(check_complete(at(Role::Input, 0, 1), 1));
  CHECK_FALSE(check_complete(at(Role::Input, 0, 1), 15));

  const ColorString one{Color::Blue};
  const auto r = input_press(at(Role::Input, 0, 1), one, Color::Blue, GameConfig{1, 2});
  CHECK(r.outcome == PressOutcome::RoundMatched);
  CHECK(r.state.status == Status::Completed);
}

TEST_CASE("abort resolution") {
  auto prompt = at(Role::Input, 0, 1, 2);
  prompt.status = Status::AbortPrompt;
  const auto restart = resolve_abort(prompt, AbortChoice::Restart);
  CHECK(restart.directive == Directive::RestartPairing);
  CHECK(restart.state.status == Status::Aborted);
  const auto cancel = resolve_abort(prompt, AbortChoice::Cancel);
  CHECK(cancel.directive == Directive::Cancelled);
  CHECK(cancel.state.status == Status::Aborted);
  CHECK(code_of([] { resolve_abort(at(Role::Input, 0, 1), AbortChoice::Cancel); }) ==
        ErrorCode::InvalidState);

  const ColorString c = sample(4);
  const GameConfig cfg{4, 2};
  CHECK(code_of([&] { input_press(cancel.state, c, c[0], cfg); }) == ErrorCode::InvalidState);
  CHECK(code_of([&] { apply_error(cancel.state, cfg); }) == ErrorCode::InvalidState);
}

TEST_CASE("abort prompt text") {
  CHECK(kAbortPrompt ==
        "It seems that something has gone wrong. Would you like to restart the session? [Y/N]");
}

TEST_CASE("engine logs events and guards roles") {
  const ColorString c = sample(3);
  Engine display(Role::Display, c, GameConfig{3, 2});
  Engine input(Role::Input, c, GameConfig{3, 2});

  CHECK(display.show_pattern() == ColorString{c[0]});
  CHECK(input.press(c[0]) == PressOutcome::RoundMatched);
  display.next();
  CHECK(display.show_pattern() == ColorString{c[0], c[1]});
  CHECK(input.press(c[0]) == PressOutcome::Partial);
  CHECK(input.press(other(c[1])) == PressOutcome::Mismatch);
  display.previous();
  CHECK(display.state() == [&] {
    auto s = input.state();
    s.role = Role::Display;
    return s;
  }());

  CHECK(code_of([&] { display.press(c[0]); }) == ErrorCode::InvalidState);
  CHECK(code_of([&] { input.next(); }) == ErrorCode::InvalidState);

  const auto& ev = input.events();
  REQUIRE(ev.size() == 5);
  CHECK(ev[0].event.kind == GameEvent::Kind::ColorPressed);
  CHECK(ev[1].event.kind == GameEvent::Kind::RoundMatched);
  CHECK(ev[4].event.kind == GameEvent::Kind::Mismatch);
  CHECK(ev[4].event.position == 1);
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev[i].seq == i);
  CHECK(display.events()[0].event.kind == GameEvent::Kind::PatternDisplayed);
}

TEST_CASE("engine raises the prompt after two single-color failures") {
  const ColorString c = sample(5);
  Engine input(Role::Input, c, GameConfig{5, 2});
  CHECK(input.press(other(c[0])) == PressOutcome::Mismatch);
  CHECK(input.state().status == Status::InProgress);
  CHECK(input.press(other(c[0])) == PressOutcome::Mismatch);
  CHECK(input.state().status == Status::AbortPrompt);
  CHECK(input.events().back().event.kind == GameEvent::Kind::AbortPromptShown);
  CHECK(code_of([&] { input.press(c[0]); }) == ErrorCode::InvalidState);
  CHECK(input.resolve(AbortChoice::Restart) == Directive::RestartPairing);
  CHECK(input.state().status == Status::Aborted);
}

TEST_CASE("a match between single-color failures resets the count") {
  const ColorString c = sample(5);
  Engine input(Role::Input, c, GameConfig{5, 2});
  input.press(other(c[0]));
  CHECK(input.state().single_fail_count == 1);
  input.press(c[0]);
  CHECK(input.state().single_fail_count == 0);
}

TEST_CASE("engine rejects mismatched configuration") {
  CHECK(code_of([] { Engine(Role::Input, sample(4), GameConfig{5, 2}); }) ==
        ErrorCode::InvalidInput);
  CHECK(code_of([] { Engine(Role::Input, sample(4), GameConfig{4, 0}); }) ==
        ErrorCode::InvalidInput);
}

TEST_CASE("mutual session outcomes") {
  auto ok = mutual_session([](int) { return DirectedResult{true, 17}; });
  CHECK(ok.outcome == MutualOutcome::MutuallyAuthenticated);
  CHECK(ok.total_rounds == 34);
  auto second = mutual_session([](int d) { return DirectedResult{d == 0, 5}; });
  CHECK(second.outcome == MutualOutcome::SecondDirectionFailed);
  int calls = 0;
  auto first = mutual_session([&](int) {
    ++calls;
    return DirectedResult{false, 3};
  });
  CHECK(first.outcome == MutualOutcome::FirstDirectionFailed);
  CHECK(calls == 1);
}
