#include "alicesays/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "alicesays/adversary.hpp"
#include "alicesays/error.hpp"

namespace alicesays::sim {

using game::Color;

namespace {

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::InvalidInput, "sim: " + why);
}

double parse_number(std::string_view text, const char* what) {
  double v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end)
    invalid(std::string("bad ") + what + " '" + std::string(text) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::array<std::uint8_t, 32> key_from(Rng& rng) {
  std::array<std::uint8_t, 32> key{};
  for (int w = 0; w < 4; ++w) {
    const std::uint64_t v = rng();
    for (int b = 0; b < 8; ++b) key[w * 8 + b] = static_cast<std::uint8_t>(v >> (8 * b));
  }
  return key;
}

double normal(Rng& rng) {
  // Box-Muller; avoids implementation-defined std::normal_distribution.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.min = *std::min_element(xs.begin(), xs.end());
  m.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

}  // namespace

std::uint64_t session_seed(std::uint64_t master, std::uint64_t index) noexcept {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  if (bound == 0) invalid("uniform_below(0)");
  const std::uint64_t limit = Rng::max() - Rng::max() % bound;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % bound;
  }
}

double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

UserModel UserModel::deterministic_span(int l) {
  UserModel m;
  m.kind = Kind::DeterministicSpan;
  m.span = l;
  return m;
}

UserModel UserModel::stochastic(double span_mean, double slip_prob) {
  UserModel m;
  m.kind = Kind::Stochastic;
  m.span_mean = span_mean;
  m.slip_prob = slip_prob;
  return m;
}

UserModel UserModel::guesser() {
  UserModel m;
  m.kind = Kind::RandomGuesser;
  return m;
}

UserModel UserModel::faithful() { return {}; }

UserModel UserModel::parse(std::string_view text) {
  const auto parts = split(text, ':');
  const auto& head = parts[0];
  UserModel m;
  if (head == "faithful" && parts.size() == 1) {
    m = faithful();
  } else if (head == "guesser" && parts.size() == 1) {
    m = guesser();
  } else if (head == "span" && parts.size() == 2) {
    const double l = parse_number(parts[1], "span");
    if (l != std::floor(l)) invalid("span must be an integer");
    m = deterministic_span(static_cast<int>(l));
  } else if (head == "stochastic" && parts.size() == 3) {
    m = stochastic(parse_number(parts[1], "span mean"), parse_number(parts[2], "slip"));
  } else {
    invalid("unknown user model '" + std::string(text) +
            "' (expected span:L, stochastic:MEAN:Q, guesser or faithful)");
  }
  m.validate();
  return m;
}

std::string UserModel::to_string() const {
  switch (kind) {
    case Kind::DeterministicSpan: return "span:" + std::to_string(span);
    case Kind::Stochastic: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "stochastic:%.6g:%.6g", span_mean, slip_prob);
      return buf;
    }
    case Kind::RandomGuesser: return "guesser";
    case Kind::Faithful: return "faithful";
  }
  return "?";
}

void UserModel::validate() const {
  if (kind == Kind::DeterministicSpan && span < 1) invalid("span must be >= 1");
  if (kind == Kind::Stochastic) {
    if (!(span_mean >= 1.0)) invalid("stochastic span mean must be >= 1");
    if (!(slip_prob >= 0.0 && slip_prob <= 1.0)) invalid("slip probability must be in [0,1]");
  }
}

SimulatedUser::SimulatedUser(const UserModel& model, Rng& rng) : model_(model), rng_(rng) {
  model_.validate();
  if (model_.kind == UserModel::Kind::DeterministicSpan) {
    span_ = model_.span;
  } else if (model_.kind == UserModel::Kind::Stochastic) {
    const double whole = std::floor(model_.span_mean);
    span_ = static_cast<int>(whole) + (uniform01(rng_) < model_.span_mean - whole ? 1 : 0);
  }
}

Color SimulatedUser::wrong_color(Color shown) {
  auto k = static_cast<unsigned>(uniform_below(rng_, 3));
  if (k >= static_cast<unsigned>(shown)) ++k;
  return static_cast<Color>(k);
}

Color SimulatedUser::press(std::span<const Color> shown, int position) {
  const Color want = shown[static_cast<std::size_t>(position)];
  switch (model_.kind) {
    case UserModel::Kind::Faithful:
      return want;
    case UserModel::Kind::RandomGuesser:
      return static_cast<Color>(uniform_below(rng_, 4));
    case UserModel::Kind::DeterministicSpan:
      return position >= span_ ? wrong_color(want) : want;
    case UserModel::Kind::Stochastic: {
      const bool slip = uniform01(rng_) < model_.slip_prob;
      return position >= span_ || slip ? wrong_color(want) : want;
    }
  }
  return want;
}

void TimingModel::validate() const {
  for (double v : {flash_ms, gap_ms, press_latency_ms, press_latency_sd_ms, round_overhead_ms})
    if (!(v >= 0.0) || !std::isfinite(v)) invalid("timing parameters must be finite and >= 0");
}

std::string_view to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::Honest: return "honest";
    case Scenario::Mitm: return "mitm";
    case Scenario::Corrupt: return "corrupt";
  }
  return "?";
}

Scenario parse_scenario(std::string_view text) {
  for (Scenario s : {Scenario::Honest, Scenario::Mitm, Scenario::Corrupt})
    if (to_string(s) == text) return s;
  invalid("unknown scenario '" + std::string(text) + "'");
}

void SessionConfig::validate() const {
  sas::validate_oob_bits(oob_bits);
  if (abort_threshold < 1) invalid("abort threshold must be >= 1");
  if (round_cap < 1) invalid("round cap must be >= 1");
  timing.validate();
}

double estimate_duration(const SessionStats& s, const TimingModel& t) {
  const double ms = s.flashes * (t.flash_ms + t.gap_ms) + s.presses * t.press_latency_ms +
                    s.rounds * t.round_overhead_ms;
  return ms / 1000.0;
}

SessionStats play_game(const game::ColorString& display_colors,
                       const game::ColorString& input_colors, const UserModel& user,
                       const SessionConfig& config, Rng& rng,
                       const RoundObserver& observer) {
  const game::GameConfig gc{static_cast<int>(display_colors.size()), config.abort_threshold};
  game::Engine display(game::Role::Display, display_colors, gc);
  game::Engine input(game::Role::Input, input_colors, gc);
  Rng timing_rng(rng());
  SimulatedUser player(user, rng);
  const TimingModel& t = config.timing;

  SessionStats st;
  double latency_ms = 0;
  for (;;) {
    const auto status = input.state().status;
    if (status == game::Status::Completed) {
      st.completed = true;
      break;
    }
    if (status == game::Status::AbortPrompt) {
      st.aborted = true;
      input.resolve(game::AbortChoice::Cancel);
      if (display.state().status == game::Status::AbortPrompt)
        display.resolve(game::AbortChoice::Cancel);
      break;
    }
    if (st.rounds >= config.round_cap) {
      st.capped = true;
      break;
    }

    const auto pattern = display.show_pattern();
    ++st.rounds;
    st.flashes += static_cast<int>(pattern.size());
    RoundRecord record;
    record.round = st.rounds;
    record.first_color = display.state().committed + 1;
    record.pattern = pattern;
    for (int p = 0; p < static_cast<int>(pattern.size()); ++p) {
      const Color c = player.press(pattern, p);
      ++st.presses;
      latency_ms += t.press_latency_sd_ms > 0
                        ? std::max(0.0, t.press_latency_ms +
                                            t.press_latency_sd_ms * normal(timing_rng))
                        : t.press_latency_ms;
      const auto outcome = input.press(c);
      ++record.presses;
      if (outcome == game::PressOutcome::Partial) continue;
      record.outcome = outcome;
      if (outcome == game::PressOutcome::Mismatch) record.mismatch_position = p;
      if (outcome == game::PressOutcome::RoundMatched) {
        display.next();
      } else {
        ++st.mistakes;
        display.previous();
        if (input.state().status == game::Status::InProgress)
          st.restart_offsets.push_back(2 * input.state().committed + 1);
      }
      break;
    }

    const auto& ds = display.state();
    const auto& is = input.state();
    if (ds.committed != is.committed || ds.round_len != is.round_len ||
        ds.status != is.status)
      throw Error(ErrorCode::InternalInconsistency, "sim: display and input engines diverged");
    if (observer) {
      record.committed_after = is.committed;
      record.status_after = is.status;
      observer(record);
    }
  }

  st.bits_conveyed = st.completed ? 2 * gc.colors : 2 * input.state().committed;
  st.sim_duration_s = (st.flashes * (t.flash_ms + t.gap_ms) + latency_ms +
                       st.rounds * t.round_overhead_ms) /
                      1000.0;
  return st;
}

namespace {

struct PairedStrings {
  std::optional<game::ColorString> initiator;
  std::optional<game::ColorString> responder;
  bool oob_match = false;
};

PairedStrings pair_devices(Scenario scenario, const SessionConfig& config, Rng& rng) {
  DeterministicRandom initiator_rng(key_from(rng));
  DeterministicRandom responder_rng(key_from(rng));
  sas::PairingConfig pc;
  pc.oob_bits = config.oob_bits;

  std::optional<channel::Adversary> adversary;
  if (scenario == Scenario::Mitm) {
    adversary.emplace(channel::AdversaryPolicy::mitm(rng()), pc);
  } else if (scenario == Scenario::Corrupt) {
    // One flipped bit in one of the three protocol frames.
    const auto frame = static_cast<std::uint32_t>(uniform_below(rng, 3));
    const auto bit = static_cast<std::uint32_t>(uniform_below(rng, 256));
    adversary.emplace(channel::AdversaryPolicy::corrupt({{frame, bit}}), pc);
  }

  const auto run = channel::pair_in_process(pc, initiator_rng, responder_rng,
                                            adversary ? &*adversary : nullptr);
  PairedStrings out;
  if (!run.both_succeeded()) return out;
  out.initiator = game::colors_from_bits(run.initiator->oob);
  out.responder = game::colors_from_bits(run.responder->oob);
  out.oob_match = run.initiator->oob == run.responder->oob;
  return out;
}

}  // namespace

SessionStats simulate_session(const UserModel& user, Scenario scenario,
                              const SessionConfig& config, std::uint64_t seed,
                              const RoundObserver& observer) {
  config.validate();
  user.validate();
  Rng rng(seed);
  const PairedStrings devices = pair_devices(scenario, config, rng);
  if (!devices.initiator) {
    SessionStats st;
    st.protocol_abort = true;
    return st;
  }
  SessionStats st =
      play_game(*devices.initiator, *devices.responder, user, config, rng, observer);
  st.oob_match = devices.oob_match;
  return st;
}

MutualStats simulate_mutual(const UserModel& user_a, const UserModel& user_b,
                            Scenario scenario, const SessionConfig& config,
                            std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const PairedStrings devices = pair_devices(scenario, config, rng);
  MutualStats out;
  if (!devices.initiator) {
    out.result = {game::MutualOutcome::FirstDirectionFailed, {}, 0};
    return out;
  }
  out.result = game::mutual_session([&](int direction) {
    SessionStats st = direction == 0
                          ? play_game(*devices.initiator, *devices.responder, user_a, config, rng)
                          : play_game(*devices.responder, *devices.initiator, user_b, config, rng);
    st.oob_match = devices.oob_match;
    out.directions.push_back(st);
    return game::DirectedResult{st.completed, st.rounds};
  });
  return out;
}

BatchSummary run_batch(const BatchSpec& spec, std::uint64_t master_seed) {
  if (spec.sessions < 1) invalid("sessions must be >= 1");
  spec.config.validate();
  spec.user.validate();

  const auto n = static_cast<std::size_t>(spec.sessions);
  std::vector<SessionStats> results(n);
  unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = simulate_session(spec.user, spec.scenario, spec.config,
                                      session_seed(master_seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = n;
        return;
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  BatchSummary sum;
  sum.sessions = spec.sessions;
  std::vector<double> rounds, presses, mistakes, bits, duration;
  for (const auto& s : results) {
    sum.completed += s.completed;
    sum.aborted += s.aborted;
    sum.capped += s.capped;
    sum.protocol_aborts += s.protocol_abort;
    if (spec.scenario != Scenario::Honest) sum.oob_collisions += s.oob_match;
    rounds.push_back(s.rounds);
    presses.push_back(s.presses);
    mistakes.push_back(s.mistakes);
    bits.push_back(s.bits_conveyed);
    duration.push_back(s.sim_duration_s);
    ++sum.rounds_histogram[s.rounds];
    ++sum.mistakes_histogram[s.mistakes];
  }
  sum.rounds = moments(rounds);
  sum.presses = moments(presses);
  sum.mistakes = moments(mistakes);
  sum.bits_conveyed = moments(bits);
  sum.duration_s = moments(duration);
  if (spec.keep_sessions) sum.per_session = std::move(results);
  return sum;
}

}  // namespace alicesays::sim
