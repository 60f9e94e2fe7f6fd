#include <cmath>

#include "alicesays/error.hpp"
#include "alicesays/sim.hpp"

namespace alicesays::sim {

namespace {

constexpr int kMaxBisections = 40;

double mean_mistakes(double span_mean, double q, const SessionConfig& config,
                     int sessions, std::uint64_t seed) {
  BatchSpec spec;
  spec.sessions = sessions;
  spec.user = UserModel::stochastic(span_mean, q);
  spec.config = config;
  return run_batch(spec, seed).mistakes.mean;
}

}  // namespace

SlipFit fit_slip_probability(double span_mean, double target, const SessionConfig& config,
                             int sessions, std::uint64_t seed, double tolerance) {
  if (!(tolerance > 0)) throw Error(ErrorCode::InvalidInput, "calibrate: tolerance must be > 0");
  double lo = 0.0, hi = 0.5;
  const double at_lo = mean_mistakes(span_mean, lo, config, sessions, seed);
  const double at_hi = mean_mistakes(span_mean, hi, config, sessions, seed);
  if (target < at_lo || target > at_hi)
    throw Error(ErrorCode::InvalidInput,
                "calibrate: target mean mistakes outside reachable range [" +
                    std::to_string(at_lo) + ", " + std::to_string(at_hi) + "]");

  SlipFit fit{lo, at_lo, 0};
  if (std::abs(at_lo - target) <= tolerance / 2) return fit;
  // Aim inside half the tolerance so the fitted value keeps a margin.
  for (int i = 1; i <= kMaxBisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double m = mean_mistakes(span_mean, mid, config, sessions, seed);
    fit = {mid, m, i};
    if (std::abs(m - target) <= tolerance / 2) break;
    (m < target ? lo : hi) = mid;
  }
  return fit;
}

TimingFit fit_round_overhead(const UserModel& user, const SessionConfig& config,
                             const TimingModel& base, int sessions, std::uint64_t seed,
                             double target_s) {
  BatchSpec spec;
  spec.sessions = sessions;
  spec.user = user;
  spec.config = config;
  spec.config.timing = base;
  spec.config.timing.round_overhead_ms = 0;
  const BatchSummary without = run_batch(spec, seed);
  if (without.rounds.mean <= 0)
    throw Error(ErrorCode::InvalidInput, "calibrate: sessions played no rounds");

  // Duration is affine in the overhead for fixed sessions, so one solve suffices.
  const double overhead_ms =
      (target_s - without.duration_s.mean) * 1000.0 / without.rounds.mean;
  if (overhead_ms < 0)
    throw Error(ErrorCode::InvalidInput,
                "calibrate: target duration below the flash and press time alone (" +
                    std::to_string(without.duration_s.mean) + " s)");

  spec.config.timing.round_overhead_ms = overhead_ms;
  const BatchSummary with = run_batch(spec, seed);
  return {spec.config.timing, with.duration_s.mean, with.duration_s.sd};
}

}  // namespace alicesays::sim
