#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "alicesays/game.hpp"

namespace alicesays::sim {

/// Per-session generator: std::mt19937_64 seeded with session_seed().
using Rng = std::mt19937_64;

/// SplitMix64 finalizer applied to master + (index + 1) * golden ratio.
std::uint64_t session_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Uniform integer in [0, bound) by rejection; portable across standard
/// libraries, unlike std::uniform_int_distribution.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);
/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(Rng& rng);

struct UserModel {
  enum class Kind { DeterministicSpan, Stochastic, RandomGuesser, Faithful };

  Kind kind = Kind::Faithful;
  int span = 0;           // DeterministicSpan
  double span_mean = 0;   // Stochastic
  double slip_prob = 0;   // Stochastic

  static UserModel deterministic_span(int l);
  static UserModel stochastic(double span_mean, double slip_prob);
  static UserModel guesser();
  static UserModel faithful();

  /// "span:L", "stochastic:MEAN:Q", "guesser", "faithful".
  static UserModel parse(std::string_view text);
  std::string to_string() const;
  void validate() const;
};

/// The per-session behaviour drawn from a UserModel.
class SimulatedUser {
 public:
  SimulatedUser(const UserModel& model, Rng& rng);

  /// Color pressed for `shown[position]`.
  game::Color press(std::span<const game::Color> shown, int position);

 private:
  game::Color wrong_color(game::Color shown);

  UserModel model_;
  Rng& rng_;
  int span_ = 0;
};

struct TimingModel {
  double flash_ms = 300.0;
  double gap_ms = 0.0;
  double press_latency_ms = 0.0;
  double press_latency_sd_ms = 0.0;
  double round_overhead_ms = 0.0;

  void validate() const;
};

enum class Scenario { Honest, Mitm, Corrupt };
std::string_view to_string(Scenario s) noexcept;
Scenario parse_scenario(std::string_view text);

inline constexpr int kDefaultRoundCap = 500;

struct SessionConfig {
  int oob_bits = sas::kDefaultOobBits;
  int abort_threshold = game::kDefaultAbortThreshold;
  int round_cap = kDefaultRoundCap;
  TimingModel timing;

  void validate() const;
};

struct SessionStats {
  bool completed = false;
  bool aborted = false;
  bool capped = false;
  bool protocol_abort = false;
  bool oob_match = false;  // both devices derived the same OOB string
  int rounds = 0;
  int presses = 0;
  int mistakes = 0;
  int flashes = 0;  // colors flashed, summed over rounds
  int bits_conveyed = 0;
  double sim_duration_s = 0;
  std::vector<int> restart_offsets;  // 1-based OOB bit starting each restart
};

/// One displayed pattern and how it ended.
struct RoundRecord {
  int round = 0;
  int first_color = 0;  // 1-based index of the pattern's first color
  std::vector<game::Color> pattern;
  game::PressOutcome outcome = game::PressOutcome::Partial;
  int presses = 0;
  int mismatch_position = -1;
  int committed_after = 0;
  game::Status status_after = game::Status::InProgress;
};

using RoundObserver = std::function<void(const RoundRecord&)>;

/// Pairs the two devices in process (with the scenario's adversary), then
/// drives a display engine and an input engine with the simulated user.
/// Deterministic in `seed`.
SessionStats simulate_session(const UserModel& user, Scenario scenario,
                              const SessionConfig& config, std::uint64_t seed,
                              const RoundObserver& observer = {});

/// Plays one directed game on given strings; used by the session simulator
/// and by mutual-mode runs.
SessionStats play_game(const game::ColorString& display,
                       const game::ColorString& input, const UserModel& user,
                       const SessionConfig& config, Rng& rng,
                       const RoundObserver& observer = {});

/// Expected duration using the mean press latency:
/// flashes * (flash + gap) + presses * latency + rounds * overhead.
double estimate_duration(const SessionStats& stats, const TimingModel& t);

struct BatchSpec {
  int sessions = 1;
  UserModel user;
  Scenario scenario = Scenario::Honest;
  SessionConfig config;
  int threads = 0;  // 0 selects hardware concurrency
  bool keep_sessions = false;
};

struct Moments {
  double mean = 0, sd = 0, min = 0, max = 0;
};

struct BatchSummary {
  int sessions = 0;
  int completed = 0;
  int aborted = 0;
  int capped = 0;
  int protocol_aborts = 0;
  int oob_collisions = 0;  // meaningful for adversarial scenarios
  Moments rounds, presses, mistakes, bits_conveyed, duration_s;
  std::map<int, int> rounds_histogram;
  std::map<int, int> mistakes_histogram;
  std::vector<SessionStats> per_session;  // when keep_sessions
};

/// Sessions run in parallel; aggregation follows session index order, so the
/// summary does not depend on the thread count.
BatchSummary run_batch(const BatchSpec& spec, std::uint64_t master_seed);

// Mutual authentication: both directions over one OOB string pair.
struct MutualStats {
  game::MutualResult result;
  std::vector<SessionStats> directions;
};

MutualStats simulate_mutual(const UserModel& user_a, const UserModel& user_b,
                            Scenario scenario, const SessionConfig& config,
                            std::uint64_t seed);

// Calibration fits. Both are deterministic for a fixed seed.
inline constexpr double kCalibrationSpanMean = 8.0;

struct SlipFit {
  double slip_prob = 0;
  double mean_mistakes = 0;
  int iterations = 0;
};

/// Bisection on the Stochastic slip probability under common random numbers.
SlipFit fit_slip_probability(double span_mean, double target_mistakes,
                             const SessionConfig& config, int sessions,
                             std::uint64_t seed, double tolerance);

struct TimingFit {
  TimingModel timing;
  double mean_duration_s = 0;
  double sd_duration_s = 0;
};

/// Solves for round_overhead_ms so that the batch mean duration hits
/// `target_s`; the other timing fields are held at `base`.
TimingFit fit_round_overhead(const UserModel& user, const SessionConfig& config,
                             const TimingModel& base, int sessions,
                             std::uint64_t seed, double target_s);

}  // namespace alicesays::sim
