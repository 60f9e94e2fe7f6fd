#pragma once

#include <json.hpp>

#include <string>

#include "alicesays/game.hpp"
#include "alicesays/sim.hpp"

// Request/report layer behind the CLI and the C API. Every command takes a
// JSON request (absent fields take defaults) and returns the text to print.
// Validation failures throw Error{InvalidInput}.
namespace alicesays::commands {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

std::string simulate(const nlohmann::json& request);
std::string attack(const nlohmann::json& request);
std::string oracle(const nlohmann::json& request);
std::string model_check(const nlohmann::json& request);
std::string calibrate(const nlohmann::json& request);
std::string demo_trace(const nlohmann::json& request);

Json to_json(const sim::SessionStats& s);
Json to_json(const sim::BatchSummary& s);
Json to_json(const game::EventRecord& e);

/// "key,value" rows for every leaf, with dotted paths.
std::string flatten_csv(const Json& j);

}  // namespace alicesays::commands
