#include <csignal>
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "alicesays/alicesays.h"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

using Request = nlohmann::ordered_json;
using Command = as_status (*)(const char*, char**);

struct TimingFlags {
  std::optional<double> flash_ms, gap_ms, latency_ms, latency_sd_ms, overhead_ms;

  void add(CLI::App* app) {
    app->add_option("--flash-ms", flash_ms, "Flash duration per color (ms)")
        ->envname("ALICESAYS_FLASH_MS");
    app->add_option("--gap-ms", gap_ms, "Gap between flashes (ms)")
        ->envname("ALICESAYS_GAP_MS");
    app->add_option("--latency-ms", latency_ms, "Mean press latency (ms)")
        ->envname("ALICESAYS_LATENCY_MS");
    app->add_option("--latency-sd-ms", latency_sd_ms, "Press latency deviation (ms)")
        ->envname("ALICESAYS_LATENCY_SD_MS");
    app->add_option("--round-overhead-ms", overhead_ms, "Fixed cost per round (ms)")
        ->envname("ALICESAYS_ROUND_OVERHEAD_MS");
  }

  void apply(Request& req) const {
    Request t = Request::object();
    if (flash_ms) t["flash_ms"] = *flash_ms;
    if (gap_ms) t["gap_ms"] = *gap_ms;
    if (latency_ms) t["press_latency_ms"] = *latency_ms;
    if (latency_sd_ms) t["press_latency_sd_ms"] = *latency_sd_ms;
    if (overhead_ms) t["round_overhead_ms"] = *overhead_ms;
    if (!t.empty()) req["timing"] = t;
  }
};

struct CommonFlags {
  std::optional<int> bits, threshold, round_cap, sessions, threads;
  std::uint64_t seed = 0;
  std::string format = "json";
  TimingFlags timing;

  void add(CLI::App* app, bool with_sessions) {
    app->add_option("--bits", bits, "OOB string length in bits (even)")
        ->envname("ALICESAYS_BITS");
    app->add_option("--threshold", threshold, "Consecutive single-color failures before abort")
        ->envname("ALICESAYS_THRESHOLD");
    app->add_option("--round-cap", round_cap, "Maximum rounds per session")
        ->envname("ALICESAYS_ROUND_CAP");
    app->add_option("--seed", seed, "Master seed")->envname("ALICESAYS_SEED");
    app->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->envname("ALICESAYS_FORMAT");
    if (with_sessions) {
      app->add_option("--sessions", sessions, "Number of sessions")
          ->envname("ALICESAYS_SESSIONS");
      app->add_option("--threads", threads, "Worker threads (0 = hardware)")
          ->envname("ALICESAYS_THREADS");
    }
    timing.add(app);
  }

  Request request() const {
    Request req = Request::object();
    if (bits) req["bits"] = *bits;
    if (threshold) req["threshold"] = *threshold;
    if (round_cap) req["round_cap"] = *round_cap;
    if (sessions) req["sessions"] = *sessions;
    if (threads) req["threads"] = *threads;
    req["seed"] = seed;
    req["format"] = format;
    timing.apply(req);
    return req;
  }
};

int report_failure(as_status s) {
  std::fprintf(stderr, "error: %s: %s\n", as_status_name(s), as_last_error());
  return s == AS_ERR_INVALID_INPUT ? kExitUsage : kExitRuntime;
}

int run(Command cmd, const Request& req) {
  char* out = nullptr;
  const as_status s = cmd(req.dump().c_str(), &out);
  if (s != AS_OK) return report_failure(s);
  std::fputs(out, stdout);
  std::fflush(stdout);
  as_string_free(out);
  return 0;
}

as_service* g_service = nullptr;

extern "C" void on_signal(int) { as_service_stop(g_service); }

int serve(const Request& config) {
  as_service* svc = nullptr;
  as_status s = as_service_create(config.dump().c_str(), &svc);
  if (s != AS_OK) return report_failure(s);
  g_service = svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::printf("listening on %s:%u\n", config.value("host", "127.0.0.1").c_str(),
              static_cast<unsigned>(as_service_port(svc)));
  std::fflush(stdout);
  s = as_service_run(svc);
  g_service = nullptr;
  as_service_destroy(svc);
  return s == AS_OK ? 0 : report_failure(s);
}

bool split_listen(const std::string& listen, Request& config) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) return false;
  try {
    std::size_t used = 0;
    const int port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1 || port < 0 || port > 65535) return false;
    config["host"] = listen.substr(0, colon);
    config["port"] = port;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alice Says pairing toolkit: simulation, attack evaluation and live service"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(as_version()));

  auto* simulate = app.add_subcommand("simulate", "Simulate pairing sessions");
  CommonFlags sim_flags;
  sim_flags.add(simulate, true);
  std::string user = "faithful", scenario = "honest";
  simulate->add_option("--user", user, "span:L | stochastic:MEAN:Q | guesser | faithful")
      ->envname("ALICESAYS_USER");
  simulate->add_option("--scenario", scenario, "honest | mitm | corrupt")
      ->envname("ALICESAYS_SCENARIO");
  bool detail = false;
  simulate->add_flag("--detail", detail, "Include per-session records in JSON output")
      ->envname("ALICESAYS_DETAIL");

  auto* attack = app.add_subcommand("attack", "Evaluate MITM detection and random guessing");
  CommonFlags attack_flags;
  attack_flags.add(attack, true);
  std::string mode = "both";
  attack->add_option("--mode", mode, "Attack batches to run")
      ->check(CLI::IsMember({"both", "mitm", "guesser"}))
      ->envname("ALICESAYS_MODE");
  bool collisions = false;
  attack->add_flag("--report-collisions", collisions, "Report OOB collision statistics")
      ->envname("ALICESAYS_REPORT_COLLISIONS");

  auto* oracle = app.add_subcommand("oracle", "Exact random-guesser probabilities (bits <= 8)");
  CommonFlags oracle_flags;
  oracle_flags.add(oracle, false);

  auto* check = app.add_subcommand("model-check", "Exhaustive small-N game model check");
  CommonFlags check_flags;
  check_flags.add(check, false);

  auto* calibrate = app.add_subcommand("calibrate", "Fit slip probability and round overhead");
  CommonFlags cal_flags;
  cal_flags.add(calibrate, true);
  std::optional<double> target_mistakes, target_duration, tolerance;
  calibrate->add_option("--target-mistakes", target_mistakes, "Target mean mistakes")
      ->envname("ALICESAYS_TARGET_MISTAKES");
  calibrate->add_option("--target-duration-s", target_duration, "Target mean duration (s)")
      ->envname("ALICESAYS_TARGET_DURATION_S");
  calibrate->add_option("--tolerance", tolerance, "Mistake fit tolerance")
      ->envname("ALICESAYS_TOLERANCE");

  auto* trace = app.add_subcommand("demo-trace", "Print a round-by-round session log");
  CommonFlags trace_flags;
  trace_flags.add(trace, false);
  std::string trace_user = "span:5";
  trace->add_option("--user", trace_user, "User model")->envname("ALICESAYS_USER");

  auto* serve_cmd = app.add_subcommand("serve", "Host live two-player pairing sessions");
  std::string listen = "127.0.0.1:8787", adversary = "passive";
  std::optional<int> serve_bits, serve_threshold;
  std::optional<double> serve_flash;
  std::uint64_t serve_seed = 0;
  bool verbose = false;
  serve_cmd->add_option("--listen", listen, "host:port to bind")->envname("ALICESAYS_LISTEN");
  serve_cmd->add_option("--bits", serve_bits, "OOB string length in bits")
      ->envname("ALICESAYS_BITS");
  serve_cmd->add_option("--threshold", serve_threshold, "Abort threshold")
      ->envname("ALICESAYS_THRESHOLD");
  serve_cmd->add_option("--flash-ms", serve_flash, "Flash duration sent to clients (ms)")
      ->envname("ALICESAYS_FLASH_MS");
  serve_cmd->add_option("--adversary", adversary, "In-band channel tampering")
      ->check(CLI::IsMember({"passive", "mitm", "corrupt", "drop"}))
      ->envname("ALICESAYS_ADVERSARY");
  serve_cmd->add_option("--seed", serve_seed, "Adversary seed")->envname("ALICESAYS_SEED");
  serve_cmd->add_flag("--verbose", verbose, "Log connections to stderr")
      ->envname("ALICESAYS_VERBOSE");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (simulate->parsed()) {
    Request req = sim_flags.request();
    req["user"] = user;
    req["scenario"] = scenario;
    if (detail) req["detail"] = true;
    return run(&as_simulate, req);
  }
  if (attack->parsed()) {
    Request req = attack_flags.request();
    req["mode"] = mode;
    req["report_collisions"] = collisions;
    return run(&as_attack, req);
  }
  if (oracle->parsed()) return run(&as_oracle, oracle_flags.request());
  if (check->parsed()) return run(&as_model_check, check_flags.request());
  if (calibrate->parsed()) {
    Request req = cal_flags.request();
    if (target_mistakes) req["target_mistakes"] = *target_mistakes;
    if (target_duration) req["target_duration_s"] = *target_duration;
    if (tolerance) req["tolerance"] = *tolerance;
    return run(&as_calibrate, req);
  }
  if (trace->parsed()) {
    Request req = trace_flags.request();
    req["user"] = trace_user;
    return run(&as_demo_trace, req);
  }
  Request config = Request::object();
  if (!split_listen(listen, config)) {
    std::fprintf(stderr, "error: --listen expects host:port, got '%s'\n", listen.c_str());
    return kExitUsage;
  }
  if (serve_bits) config["bits"] = *serve_bits;
  if (serve_threshold) config["threshold"] = *serve_threshold;
  if (serve_flash) config["flash_ms"] = *serve_flash;
  config["adversary"] = adversary;
  config["seed"] = serve_seed;
  config["verbose"] = verbose;
  return serve(config);
}
