#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "etfrp/netmodel.hpp"

namespace etfrp {

using Json = nlohmann::json;

Json instance_to_json(const NetworkInstance& inst);
NetworkInstance instance_from_json(const Json& doc);

Json config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const Json& doc, const std::string& path = "/config");

// Writes `doc` with floating-point numbers in 9-significant-digit form and
// one matrix row per line. Integers, strings and booleans as nlohmann.
std::string emit_canonical(const Json& doc);

}  // namespace etfrp
