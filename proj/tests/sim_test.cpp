#include <doctest.h>

#include <cmath>
#include <map>
#include <tuple>

#include "alicesays/error.hpp"
#include "alicesays/model_check.hpp"
#include "alicesays/oracle.hpp"
#include "alicesays/sim.hpp"

using namespace alicesays;
using namespace alicesays::sim;

namespace {

// Rounds for a span-L user who fails only at the final color of rounds of
// length L+1.
int closed_form_rounds(int l, int c) { return (l + 1) * (c / l - 1) + l; }

// Round-level recursion: a round of length r succeeds with probability 4^-r,
// and every failure leads to the same restart state.
struct GuesserOracle {
  int colors, threshold, cap;
  std::map<std::tuple<int, int, int, int>, double> memo;

  double completion(int s, int r, int f, int rounds) {
    if (rounds == cap) return 0.0;
    const auto key = std::make_tuple(s, r, f, rounds);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double hit = std::pow(0.25, r);
    double p = 0;
    p += hit * (s + r == colors ? 1.0 : completion(s, r + 1, 0, rounds + 1));
    const int nf = r == 1 ? f + 1 : 0;
    if (nf < threshold) p += (1 - hit) * completion(s + r - 1, 1, nf, rounds + 1);
    return memo[key] = p;
  }
};

SessionConfig config_bits(int bits) {
  SessionConfig c;
  c.oob_bits = bits;
  return c;
}

}  // namespace

TEST_CASE("span-5 user reproduces the 30-bit trace") {
  std::vector<RoundRecord> rounds;
  const auto s = simulate_session(UserModel::parse("span:5"), Scenario::Honest,
                                  config_bits(30), 7,
                                  [&](const RoundRecord& r) { rounds.push_back(r); });
  CHECK(s.completed);
  CHECK(s.oob_match);
  CHECK(s.rounds == 17);
  CHECK(s.mistakes == 2);
  CHECK(s.bits_conveyed == 30);
  CHECK(s.restart_offsets == std::vector<int>{11, 21});
  CHECK(s.flashes == 6 * 7 / 2 + 6 * 7 / 2 + 5 * 6 / 2);
  REQUIRE(rounds.size() == 17);
  CHECK(rounds[5].outcome == game::PressOutcome::Mismatch);
  CHECK(rounds[5].committed_after == 5);
  CHECK(rounds[6].first_color == 6);
  CHECK(rounds[12].first_color == 11);
}

TEST_CASE("the trace takes 17.1 s at 300 ms per flash") {
  const auto s = simulate_session(UserModel::deterministic_span(5), Scenario::Honest,
                                  config_bits(30), 1);
  TimingModel t;
  t.flash_ms = 300;
  CHECK(estimate_duration(s, t) == doctest::Approx(17.1));
  CHECK(estimate_duration(SessionStats{}, t) == 0.0);
}

TEST_CASE("deterministic span users follow the closed form") {
  for (int l = 1; l <= 10; ++l)
    for (int c = l; c <= 40; c += l) {
      CAPTURE(l);
      CAPTURE(c);
      const auto s = simulate_session(UserModel::deterministic_span(l), Scenario::Honest,
                                      config_bits(2 * c), 3);
      CHECK(s.completed);
      CHECK(s.rounds == closed_form_rounds(l, c));
    }
}

TEST_CASE("user model parsing") {
  CHECK(UserModel::parse("span:5").kind == UserModel::Kind::DeterministicSpan);
  const auto st = UserModel::parse("stochastic:8:0.01");
  CHECK(st.span_mean == 8.0);
  CHECK(st.slip_prob == 0.01);
  CHECK(UserModel::parse("guesser").kind == UserModel::Kind::RandomGuesser);
  CHECK(UserModel::parse(UserModel::parse("span:3").to_string()).span == 3);
  for (const char* bad : {"span:0", "span:x", "stochastic:8", "stochastic:8:1.5", "oracle"})
    CHECK_THROWS_AS(UserModel::parse(bad), Error);
  CHECK_THROWS_AS(parse_scenario("sneaky"), Error);
}

TEST_CASE("invalid session configuration is rejected") {
  CHECK_THROWS_AS(config_bits(31).validate(), Error);
  SessionConfig c;
  c.round_cap = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("the round cap stops a stuck session without throwing") {
  SessionConfig c = config_bits(30);
  c.round_cap = 5;
  const auto s = simulate_session(UserModel::faithful(), Scenario::Honest, c, 1);
  CHECK(s.capped);
  CHECK_FALSE(s.completed);
  CHECK(s.rounds == 5);
}

TEST_CASE("corrupted pairings end in protocol-abort or a failed game") {
  BatchSpec spec;
  spec.sessions = 50;
  spec.scenario = Scenario::Corrupt;
  const auto s = run_batch(spec, 8);
  CHECK(s.completed == 0);
  CHECK(s.protocol_aborts + s.aborted == 50);
}

TEST_CASE("batches are reproducible and independent of thread count") {
  BatchSpec spec;
  spec.sessions = 200;
  spec.user = UserModel::stochastic(6.5, 0.05);
  spec.keep_sessions = true;
  spec.threads = 1;
  const auto a = run_batch(spec, 77);
  spec.threads = 4;
  const auto b = run_batch(spec, 77);
  CHECK(a.rounds.mean == b.rounds.mean);
  CHECK(a.mistakes.sd == b.mistakes.sd);
  CHECK(a.rounds_histogram == b.rounds_histogram);
  for (int i = 0; i < 200; ++i) CHECK(a.per_session[i].rounds == b.per_session[i].rounds);
  const auto c = run_batch(spec, 78);
  CHECK(c.rounds.mean != a.rounds.mean);
}

TEST_CASE("uniform helpers stay in range") {
  Rng rng(session_seed(1, 2));
  for (int i = 0; i < 10000; ++i) {
    CHECK(uniform_below(rng, 3) < 3);
    const double u = uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(session_seed(1, 2) != session_seed(1, 3));
  CHECK(session_seed(1, 2) != session_seed(2, 2));
}

TEST_CASE("mutual mode doubles the trace for span-5 users") {
  const auto m = simulate_mutual(UserModel::deterministic_span(5),
                                 UserModel::deterministic_span(5), Scenario::Honest,
                                 config_bits(30), 4);
  CHECK(m.result.outcome == game::MutualOutcome::MutuallyAuthenticated);
  CHECK(m.result.total_rounds == 34);

  const auto attacked = simulate_mutual(UserModel::faithful(), UserModel::faithful(),
                                        Scenario::Mitm, config_bits(30), 4);
  CHECK(attacked.result.outcome == game::MutualOutcome::FirstDirectionFailed);
}

TEST_CASE("attacked color becomes the first color of the next pattern") {
  game::ColorString display(8, game::Color::Green), input = display;
  input[4] = game::Color::Red;
  std::vector<RoundRecord> rounds;
  Rng rng(1);
  const auto s = play_game(display, input, UserModel::faithful(), config_bits(16), rng,
                           [&](const RoundRecord& r) { rounds.push_back(r); });
  CHECK(s.aborted);
  CHECK_FALSE(s.completed);
  REQUIRE(rounds.size() >= 3);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (rounds[i].outcome == game::PressOutcome::Mismatch && i + 1 < rounds.size())
      CHECK(rounds[i + 1].first_color == 5);
  }
}

TEST_CASE("guesser oracle: the single-color game") {
  const auto r = guesser_oracle(2, 2, 500);
  CHECK(r.per_press_success == 0.25);
  CHECK(r.abort == doctest::Approx(0.75 * 0.75));
  CHECK(r.completion == doctest::Approx(0.25 + 0.75 * 0.25));
  CHECK(r.completion + r.abort + r.capped == doctest::Approx(1.0));
}

TEST_CASE("guesser oracle agrees with an independent recursion") {
  for (int bits : {2, 4, 6, 8})
    for (int threshold : {1, 2, 3})
      for (int cap : {3, 10, 50}) {
        CAPTURE(bits);
        CAPTURE(threshold);
        CAPTURE(cap);
        GuesserOracle ref{bits / 2, threshold, cap, {}};
        CHECK(guesser_oracle(bits, threshold, cap).completion ==
              doctest::Approx(ref.completion(0, 1, 0, 0)).epsilon(1e-12));
      }
  CHECK_THROWS_AS(guesser_oracle(10, 2, 50), Error);
}

TEST_CASE("guesser Monte Carlo matches the oracle at N=4") {
  BatchSpec spec;
  spec.sessions = 20000;
  spec.user = UserModel::guesser();
  spec.config = config_bits(4);
  spec.config.round_cap = 50;
  const auto s = run_batch(spec, 12);
  const double p = guesser_oracle(4, 2, 50).completion;
  const double sigma = std::sqrt(p * (1 - p) / spec.sessions);
  CHECK(std::abs(static_cast<double>(s.completed) / spec.sessions - p) <= 3 * sigma);
}

TEST_CASE("model check holds for small strings") {
  for (int bits : {2, 4, 6}) {
    CAPTURE(bits);
    const auto r = model_check(bits, 2, 50);
    CHECK(r.ok());
    CHECK(r.string_pairs == static_cast<std::uint64_t>(1) << (2 * bits));
    CHECK(r.honest_pairs == static_cast<std::uint64_t>(1) << bits);
  }
  CHECK(model_check(4, 3, 20).ok());
  CHECK_THROWS_AS(model_check(10, 2, 50), Error);
}

TEST_CASE("slip calibration converges deterministically") {
  SessionConfig c = config_bits(30);
  const auto a = fit_slip_probability(8.0, 1.517, c, 1000, 5, 0.05);
  const auto b = fit_slip_probability(8.0, 1.517, c, 1000, 5, 0.05);
  CHECK(a.slip_prob == b.slip_prob);
  CHECK(std::abs(a.mean_mistakes - 1.517) <= 0.05);

  TimingModel base;
  base.gap_ms = 200;
  base.press_latency_ms = 700;
  base.press_latency_sd_ms = 250;
  const auto t = fit_round_overhead(UserModel::stochastic(8.0, a.slip_prob), c, base, 1000, 5,
                                    173.267);
  CHECK(std::abs(t.mean_duration_s - 173.267) <= 1.0);
  CHECK(t.timing.round_overhead_ms >= 0);
}
