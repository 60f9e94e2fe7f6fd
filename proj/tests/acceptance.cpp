// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "alicesays/model_check.hpp"
#include "alicesays/oracle.hpp"
#include "alicesays/sim.hpp"

using namespace alicesays;
using namespace alicesays::sim;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SessionConfig bits(int n) {
  SessionConfig c;
  c.oob_bits = n;
  return c;
}

Verdict trace_fidelity() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream os;
  for (std::uint64_t seed : {0ull, 7ull, 123456789ull}) {
    const auto s =
        simulate_session(UserModel::parse("span:5"), Scenario::Honest, bits(30), seed);
    ok = ok && s.completed && s.rounds == 17 && s.mistakes == 2 && s.bits_conveyed == 30 &&
         s.restart_offsets == std::vector<int>{11, 21};
    if (seed == 7)
      os << "rounds=" << s.rounds << " mistakes=" << s.mistakes
         << " bits=" << s.bits_conveyed << " restarts at bits " << s.restart_offsets.at(0)
         << "," << s.restart_offsets.at(1);
  }
  const double dt = seconds_since(t0);
  os << " (" << dt << " s)";
  return {ok && dt < 1.0, os.str()};
}

Verdict mitm_safety() {
  const auto t0 = Clock::now();
  BatchSpec spec;
  spec.sessions = 10000;
  spec.user = UserModel::faithful();
  spec.scenario = Scenario::Mitm;
  spec.config = bits(30);
  const auto s = run_batch(spec, 2024);
  const double dt = seconds_since(t0);
  std::ostringstream os;
  os << "completed=" << s.completed << " abort_prompt=" << s.aborted << "/" << s.sessions
     << " (" << dt << " s)";
  return {s.completed == 0 && s.aborted == s.sessions && dt < 60, os.str()};
}

Verdict collisions() {
  const auto t0 = Clock::now();
  BatchSpec spec;
  spec.sessions = 10000;
  spec.user = UserModel::faithful();
  spec.scenario = Scenario::Mitm;
  spec.config = bits(8);
  const auto s = run_batch(spec, 31337);
  const double dt = seconds_since(t0);
  const double p = 1.0 / 256;
  const double sigma = std::sqrt(p * (1 - p) / spec.sessions);
  const double freq = static_cast<double>(s.oob_collisions) / spec.sessions;
  std::ostringstream os;
  os << "frequency=" << freq << " expected=" << p << " z=" << (freq - p) / sigma << " ("
     << dt << " s)";
  return {std::abs(freq - p) <= 3 * sigma && dt < 60, os.str()};
}

Verdict model_checking() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream os;
  for (int n : {2, 4, 6}) {
    const auto r = model_check(n, 2, 50);
    ok = ok && r.ok();
    os << "N=" << n << ": " << r.string_pairs << " pairs, " << r.states << " states, "
       << r.completed_with_differing_strings << "/" << r.monotonicity_violations << "/"
       << r.attacked_first_violations << " violations; ";
  }
  const double dt = seconds_since(t0);
  os << "(" << dt << " s)";
  return {ok && dt < 300, os.str()};
}

Verdict guesser_agreement() {
  const auto exact = guesser_oracle(4, 2, kDefaultRoundCap);
  BatchSpec spec;
  spec.sessions = 100000;
  spec.user = UserModel::guesser();
  spec.config = bits(4);
  const auto s = run_batch(spec, 4);
  const double p = static_cast<double>(s.completed) / spec.sessions;
  const double sigma = std::sqrt(exact.completion * (1 - exact.completion) / spec.sessions);
  const double single = guesser_oracle(2, 2, kDefaultRoundCap).per_press_success;
  std::ostringstream os;
  os << "monte_carlo=" << p << " oracle=" << exact.completion
     << " z=" << (p - exact.completion) / sigma << " per_press=" << single;
  return {std::abs(p - exact.completion) <= 3 * sigma && single == 0.25, os.str()};
}

Verdict calibration() {
  const SessionConfig config = bits(30);
  constexpr int kSessions = 10000;
  constexpr std::uint64_t kSeed = 1;
  TimingModel base;
  base.gap_ms = 200;
  base.press_latency_ms = 700;
  base.press_latency_sd_ms = 250;
  auto fit = [&] {
    const auto slip =
        fit_slip_probability(kCalibrationSpanMean, 1.517, config, kSessions, kSeed, 0.05);
    const auto timing =
        fit_round_overhead(UserModel::stochastic(kCalibrationSpanMean, slip.slip_prob),
                           config, base, kSessions, kSeed, 173.267);
    return std::make_pair(slip, timing);
  };
  const auto [slip, timing] = fit();
  const auto [slip2, timing2] = fit();
  const bool deterministic = slip.slip_prob == slip2.slip_prob &&
                             slip.mean_mistakes == slip2.mean_mistakes &&
                             timing.timing.round_overhead_ms ==
                                 timing2.timing.round_overhead_ms &&
                             timing.mean_duration_s == timing2.mean_duration_s;
  std::ostringstream os;
  os << "slip_prob=" << slip.slip_prob << " mean_mistakes=" << slip.mean_mistakes
     << " round_overhead_ms=" << timing.timing.round_overhead_ms
     << " mean_duration_s=" << timing.mean_duration_s
     << (deterministic ? " deterministic" : " NOT deterministic");
  return {std::abs(slip.mean_mistakes - 1.517) <= 0.05 &&
              std::abs(timing.mean_duration_s - 173.267) <= 1.0 && deterministic,
          os.str()};
}

Verdict closed_form() {
  int cases = 0, mismatches = 0;
  for (int l = 1; l <= 10; ++l)
    for (int c = l; c <= 40; c += l) {
      ++cases;
      const auto s = simulate_session(UserModel::deterministic_span(l), Scenario::Honest,
                                      bits(2 * c), static_cast<std::uint64_t>(l * 100 + c));
      if (!s.completed || s.rounds != (l + 1) * (c / l - 1) + l) ++mismatches;
    }
  std::ostringstream os;
  os << cases << " (L, C) pairs, " << mismatches << " mismatches";
  return {mismatches == 0, os.str()};
}

std::string capture(const std::string& cmd, int& status) {
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) {
    status = -1;
    return out;
  }
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  status = ::pclose(p);
  return out;
}

Verdict determinism() {
  const std::string cli = ALICESAYS_CLI_PATH;
  const std::vector<std::string> runs = {
      "simulate --bits 30 --user span:5 --sessions 1 --seed 7 --format json",
      "simulate --bits 30 --user stochastic:6.5:0.02 --sessions 300 --seed 3 --format csv",
      "simulate --bits 16 --scenario mitm --sessions 200 --seed 3 --threads 3",
      "simulate --bits 30 --scenario corrupt --sessions 50 --seed 3",
      "attack --bits 8 --sessions 2000 --report-collisions --seed 5",
      "attack --mode guesser --bits 4 --sessions 2000 --seed 5 --format csv",
      "oracle --bits 6",
      "model-check --bits 4",
      "calibrate --sessions 500 --seed 9",
      "demo-trace --seed 2",
  };
  int identical = 0;
  std::string first_failure;
  for (const auto& args : runs) {
    int s1 = 0, s2 = 0;
    const std::string a = capture(cli + " " + args, s1);
    const std::string b = capture(cli + " " + args, s2);
    if (s1 == 0 && s2 == 0 && !a.empty() && a == b)
      ++identical;
    else if (first_failure.empty())
      first_failure = args;
  }
  std::ostringstream os;
  os << identical << "/" << runs.size() << " commands byte-identical across two runs";
  if (!first_failure.empty()) os << "; first difference: " << first_failure;
  return {identical == static_cast<int>(runs.size()), os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"trace-fidelity", trace_fidelity},
      {"mitm-safety", mitm_safety},
      {"oob-collision-statistics", collisions},
      {"small-n-model-check", model_checking},
      {"guesser-oracle-agreement", guesser_agreement},
      {"calibration", calibration},
      {"round-count-closed-form", closed_form},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v{false, "not run"};
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu acceptance criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
