#include "alicesays/commands.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "alicesays/error.hpp"
#include "alicesays/model_check.hpp"
#include "alicesays/oracle.hpp"

namespace alicesays::commands {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::InvalidInput, why);
}

template <typename T>
T field(const json& req, const char* name, T fallback) {
  if (!req.contains(name) || req[name].is_null()) return fallback;
  try {
    return req[name].get<T>();
  } catch (const json::exception&) {
    invalid(std::string("request field '") + name + "' has the wrong type");
  }
}

std::uint64_t seed_of(const json& req) { return field<std::uint64_t>(req, "seed", 0); }

enum class Format { Json, Csv };

Format format_of(const json& req) {
  const auto f = field<std::string>(req, "format", "json");
  if (f == "json") return Format::Json;
  if (f == "csv") return Format::Csv;
  invalid("unknown format '" + f + "' (json or csv)");
}

sim::TimingModel timing_of(const json& req, sim::TimingModel t = {}) {
  if (!req.contains("timing")) return t;
  const json& j = req["timing"];
  t.flash_ms = field(j, "flash_ms", t.flash_ms);
  t.gap_ms = field(j, "gap_ms", t.gap_ms);
  t.press_latency_ms = field(j, "press_latency_ms", t.press_latency_ms);
  t.press_latency_sd_ms = field(j, "press_latency_sd_ms", t.press_latency_sd_ms);
  t.round_overhead_ms = field(j, "round_overhead_ms", t.round_overhead_ms);
  t.validate();
  return t;
}

sim::SessionConfig session_config_of(const json& req) {
  sim::SessionConfig c;
  c.oob_bits = field(req, "bits", sas::kDefaultOobBits);
  c.abort_threshold = field(req, "threshold", game::kDefaultAbortThreshold);
  c.round_cap = field(req, "round_cap", sim::kDefaultRoundCap);
  c.timing = timing_of(req);
  c.validate();
  return c;
}

int sessions_of(const json& req, int fallback) {
  const int n = field(req, "sessions", fallback);
  if (n < 1) invalid("sessions must be >= 1");
  return n;
}

Json timing_json(const sim::TimingModel& t) {
  return {{"flash_ms", t.flash_ms},
          {"gap_ms", t.gap_ms},
          {"press_latency_ms", t.press_latency_ms},
          {"press_latency_sd_ms", t.press_latency_sd_ms},
          {"round_overhead_ms", t.round_overhead_ms}};
}

Json config_json(const sim::SessionConfig& c) {
  return {{"bits", c.oob_bits},
          {"colors", c.oob_bits / 2},
          {"threshold", c.abort_threshold},
          {"round_cap", c.round_cap},
          {"timing", timing_json(c.timing)}};
}

Json moments_json(const sim::Moments& m) {
  return {{"mean", m.mean}, {"sd", m.sd}, {"min", m.min}, {"max", m.max}};
}

Json histogram_json(const std::map<int, int>& h) {
  Json out = Json::object();
  for (const auto& [k, v] : h) out[std::to_string(k)] = v;
  return out;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string finish(const Json& report, Format format) {
  if (format == Format::Csv) return flatten_csv(report);
  return report.dump(2) + "\n";
}

void flatten_into(const Json& j, const std::string& prefix, std::string& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      flatten_into(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      flatten_into(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out += prefix + "," + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
  }
}

double binomial_sd(double p, int n) { return std::sqrt(p * (1 - p) / n); }

}  // namespace

Json to_json(const sim::SessionStats& s) {
  return {{"completed", s.completed},
          {"aborted", s.aborted},
          {"capped", s.capped},
          {"protocol_abort", s.protocol_abort},
          {"oob_match", s.oob_match},
          {"rounds", s.rounds},
          {"presses", s.presses},
          {"mistakes", s.mistakes},
          {"flashes", s.flashes},
          {"bits_conveyed", s.bits_conveyed},
          {"sim_duration_s", s.sim_duration_s},
          {"restart_offsets", s.restart_offsets}};
}

Json to_json(const sim::BatchSummary& s) {
  return {{"sessions", s.sessions},
          {"completed", s.completed},
          {"aborted", s.aborted},
          {"capped", s.capped},
          {"protocol_aborts", s.protocol_aborts},
          {"completion_rate", static_cast<double>(s.completed) / s.sessions},
          {"rounds", moments_json(s.rounds)},
          {"presses", moments_json(s.presses)},
          {"mistakes", moments_json(s.mistakes)},
          {"bits_conveyed", moments_json(s.bits_conveyed)},
          {"sim_duration_s", moments_json(s.duration_s)},
          {"rounds_histogram", histogram_json(s.rounds_histogram)},
          {"mistakes_histogram", histogram_json(s.mistakes_histogram)}};
}

Json to_json(const game::EventRecord& e) {
  Json j = {{"seq", e.seq},
            {"role", game::to_string(e.role)},
            {"event", game::to_string(e.event.kind)}};
  using K = game::GameEvent::Kind;
  if (e.event.kind == K::PatternDisplayed) {
    Json slice = Json::array();
    for (auto c : e.event.slice) slice.push_back(game::to_string(c));
    j["slice"] = slice;
  } else if (e.event.kind == K::ColorPressed) {
    j["color"] = game::to_string(e.event.color);
  } else if (e.event.kind == K::Mismatch) {
    j["position"] = e.event.position;
  }
  j["committed"] = e.committed;
  j["round_len"] = e.round_len;
  j["status"] = game::to_string(e.status);
  return j;
}

std::string flatten_csv(const Json& j) {
  std::string out = "key,value\n";
  flatten_into(j, "", out);
  return out;
}

std::string simulate(const json& req) {
  const sim::SessionConfig config = session_config_of(req);
  sim::BatchSpec spec;
  spec.sessions = sessions_of(req, 1);
  spec.user = sim::UserModel::parse(field<std::string>(req, "user", "faithful"));
  spec.scenario = sim::parse_scenario(field<std::string>(req, "scenario", "honest"));
  spec.config = config;
  spec.threads = field(req, "threads", 0);
  const Format format = format_of(req);
  const bool detail = field(req, "detail", spec.sessions == 1);
  spec.keep_sessions = detail || format == Format::Csv;
  const std::uint64_t seed = seed_of(req);
  const sim::BatchSummary summary = sim::run_batch(spec, seed);

  if (format == Format::Csv) {
    std::ostringstream os;
    os << "session,seed,completed,aborted,capped,protocol_abort,oob_match,rounds,presses,"
          "mistakes,flashes,bits_conveyed,sim_duration_s,restart_offsets\n";
    for (std::size_t i = 0; i < summary.per_session.size(); ++i) {
      const auto& s = summary.per_session[i];
      std::string offsets;
      for (std::size_t k = 0; k < s.restart_offsets.size(); ++k)
        offsets += (k ? ";" : "") + std::to_string(s.restart_offsets[k]);
      os << i << ',' << sim::session_seed(seed, i) << ',' << s.completed << ','
         << s.aborted << ',' << s.capped << ',' << s.protocol_abort << ',' << s.oob_match
         << ',' << s.rounds << ',' << s.presses << ',' << s.mistakes << ',' << s.flashes
         << ',' << s.bits_conveyed << ',' << fixed(s.sim_duration_s, 3) << ',' << offsets
         << '\n';
    }
    return os.str();
  }

  Json report = {{"schema_version", kSchemaVersion},
                 {"command", "simulate"},
                 {"seed", seed},
                 {"user", spec.user.to_string()},
                 {"scenario", sim::to_string(spec.scenario)},
                 {"config", config_json(config)},
                 {"summary", to_json(summary)}};
  if (detail) {
    Json sessions = Json::array();
    for (const auto& s : summary.per_session) sessions.push_back(to_json(s));
    report["sessions"] = sessions;
  }
  return finish(report, format);
}

std::string attack(const json& req) {
  const sim::SessionConfig config = session_config_of(req);
  const int sessions = sessions_of(req, 10000);
  const std::string mode = field<std::string>(req, "mode", "both");
  if (mode != "both" && mode != "mitm" && mode != "guesser")
    invalid("unknown attack mode '" + mode + "' (both, mitm or guesser)");
  const bool collisions = field(req, "report_collisions", false);
  const std::uint64_t seed = seed_of(req);
  const int threads = field(req, "threads", 0);

  Json report = {{"schema_version", kSchemaVersion},
                 {"command", "attack"},
                 {"seed", seed},
                 {"mode", mode},
                 {"sessions", sessions},
                 {"config", config_json(config)}};

  if (mode != "guesser") {
    sim::BatchSpec spec;
    spec.sessions = sessions;
    spec.user = sim::UserModel::faithful();
    spec.scenario = sim::Scenario::Mitm;
    spec.config = config;
    spec.threads = threads;
    const auto s = sim::run_batch(spec, seed);
    Json mitm = {{"user", "faithful"},
                 {"completed", s.completed},
                 {"aborted", s.aborted},
                 {"capped", s.capped},
                 {"protocol_aborts", s.protocol_aborts},
                 {"detection_rate", 1.0 - static_cast<double>(s.completed) / sessions},
                 {"abort_rate", static_cast<double>(s.aborted) / sessions}};
    if (collisions) {
      const double expected = std::ldexp(1.0, -config.oob_bits);
      const double sigma = binomial_sd(expected, sessions);
      const double freq = static_cast<double>(s.oob_collisions) / sessions;
      mitm["collisions"] = {{"count", s.oob_collisions},
                            {"frequency", freq},
                            {"expected", expected},
                            {"sigma", sigma},
                            {"z", sigma > 0 ? (freq - expected) / sigma : 0.0}};
    }
    report["mitm"] = mitm;
  }

  if (mode != "mitm") {
    sim::BatchSpec spec;
    spec.sessions = sessions;
    spec.user = sim::UserModel::guesser();
    spec.scenario = sim::Scenario::Honest;
    spec.config = config;
    spec.threads = threads;
    const auto s = sim::run_batch(spec, seed ^ 0x6775657373657221ull);
    const double p = static_cast<double>(s.completed) / sessions;
    Json guesser = {{"completed", s.completed},
                    {"aborted", s.aborted},
                    {"capped", s.capped},
                    {"completion_probability", p},
                    {"standard_error", binomial_sd(p, sessions)}};
    if (config.oob_bits <= sim::kOracleMaxBits) {
      const auto exact =
          sim::guesser_oracle(config.oob_bits, config.abort_threshold, config.round_cap);
      const double sigma = binomial_sd(exact.completion, sessions);
      guesser["oracle_completion"] = exact.completion;
      guesser["oracle_sigma"] = sigma;
      guesser["z"] = sigma > 0 ? (p - exact.completion) / sigma : 0.0;
      guesser["within_3_sigma"] = std::abs(p - exact.completion) <= 3 * sigma;
    } else {
      guesser["oracle_completion"] = nullptr;
    }
    report["guesser"] = guesser;
  }
  return finish(report, format_of(req));
}

std::string oracle(const json& req) {
  const int bits = field(req, "bits", 4);
  const int threshold = field(req, "threshold", game::kDefaultAbortThreshold);
  const int cap = field(req, "round_cap", sim::kDefaultRoundCap);
  const auto r = sim::guesser_oracle(bits, threshold, cap);
  const Json report = {{"schema_version", kSchemaVersion},
                       {"command", "oracle"},
                       {"bits", bits},
                       {"colors", bits / 2},
                       {"threshold", threshold},
                       {"round_cap", cap},
                       {"per_press_success", r.per_press_success},
                       {"completion", r.completion},
                       {"abort", r.abort},
                       {"capped", r.capped},
                       {"states", r.states}};
  return finish(report, format_of(req));
}

std::string model_check(const json& req) {
  const int bits = field(req, "bits", 4);
  const int threshold = field(req, "threshold", game::kDefaultAbortThreshold);
  const int cap = field(req, "round_cap", 50);
  const auto r = sim::model_check(bits, threshold, cap);
  const Json report = {{"schema_version", kSchemaVersion},
                       {"command", "model-check"},
                       {"bits", bits},
                       {"threshold", threshold},
                       {"round_cap", cap},
                       {"string_pairs", r.string_pairs},
                       {"states", r.states},
                       {"transitions", r.transitions},
                       {"completed_with_differing_strings", r.completed_with_differing_strings},
                       {"monotonicity_violations", r.monotonicity_violations},
                       {"attacked_first_violations", r.attacked_first_violations},
                       {"desync_states", r.desync_states},
                       {"honest_pairs", r.honest_pairs},
                       {"honest_pairs_completable", r.honest_pairs_completable},
                       {"ok", r.ok()}};
  return finish(report, format_of(req));
}

std::string calibrate(const json& req) {
  sim::SessionConfig config = session_config_of(req);
  const int sessions = sessions_of(req, 10000);
  const std::uint64_t seed = seed_of(req);
  const double span_mean = field(req, "span_mean", sim::kCalibrationSpanMean);
  const double target_mistakes = field(req, "target_mistakes", 1.517);
  const double target_duration = field(req, "target_duration_s", 173.267);
  const double tolerance = field(req, "tolerance", 0.05);

  const auto slip =
      sim::fit_slip_probability(span_mean, target_mistakes, config, sessions, seed, tolerance);
  sim::TimingModel base;
  base.flash_ms = 300;
  base.gap_ms = 200;
  base.press_latency_ms = 700;
  base.press_latency_sd_ms = 250;
  base = timing_of(req, base);
  const auto user = sim::UserModel::stochastic(span_mean, slip.slip_prob);
  const auto timing =
      sim::fit_round_overhead(user, config, base, sessions, seed, target_duration);

  const Json report = {
      {"schema_version", kSchemaVersion},
      {"command", "calibrate"},
      {"seed", seed},
      {"sessions", sessions},
      {"config", config_json(config)},
      {"mistakes",
       {{"target", target_mistakes},
        {"tolerance", tolerance},
        {"span_mean", span_mean},
        {"slip_prob", slip.slip_prob},
        {"mean_mistakes", slip.mean_mistakes},
        {"iterations", slip.iterations},
        {"user", user.to_string()}}},
      {"duration",
       {{"target_s", target_duration},
        {"timing", timing_json(timing.timing)},
        {"mean_duration_s", timing.mean_duration_s},
        {"sd_duration_s", timing.sd_duration_s}}}};
  return finish(report, format_of(req));
}

std::string demo_trace(const json& req) {
  sim::SessionConfig config = session_config_of(req);
  const auto user = sim::UserModel::parse(field<std::string>(req, "user", "span:5"));
  const std::uint64_t seed = seed_of(req);
  std::ostringstream os;
  os << "Alice Says two-player trace: " << config.oob_bits << " OOB bits ("
     << config.oob_bits / 2 << " colors), user " << user.to_string()
     << ", abort threshold " << config.abort_threshold << "\n";
  const auto stats = sim::simulate_session(
      user, sim::Scenario::Honest, config, seed, [&](const sim::RoundRecord& r) {
        char head[96];
        const int first_bit = 2 * r.first_color - 1;
        const int last_bit = 2 * (r.first_color + static_cast<int>(r.pattern.size()) - 1);
        std::snprintf(head, sizeof head, "round %2d  length %2zu  bits %2d-%-2d  ", r.round,
                      r.pattern.size(), first_bit, last_bit);
        os << head;
        for (std::size_t i = 0; i < r.pattern.size(); ++i)
          os << (i ? " " : "") << game::to_string(r.pattern[i]);
        if (r.outcome == game::PressOutcome::RoundMatched) {
          os << "  -> matched";
        } else {
          os << "  -> mistake at color " << r.first_color + r.mismatch_position;
          if (r.status_after == game::Status::AbortPrompt) {
            os << "; abort prompt: " << game::kAbortPrompt;
          } else {
            const int next = 2 * r.committed_after + 1;
            os << "; next pattern starts at bits " << next << "-" << next + 1;
          }
        }
        if (r.status_after == game::Status::Completed) os << "; all bits conveyed";
        os << "\n";
      });
  os << (stats.completed ? "completed" : stats.aborted ? "aborted" : "stopped at round cap")
     << ": " << stats.rounds << " rounds, " << stats.mistakes << " mistakes, "
     << stats.bits_conveyed << " bits conveyed, " << stats.flashes << " flashes\n";
  return os.str();
}

}  // namespace alicesays::commands
