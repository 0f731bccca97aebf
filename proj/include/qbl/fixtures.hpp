#pragma once

#include <string>

#include "json.hpp"
#include "qbl/bifurcation.hpp"
#include "qbl/params.hpp"

namespace qbl {

// Locate the discovered-regimes file: QBL_FIXTURES env var, then
// ./fixtures/regimes.json, then the source-tree copy.
std::string fixtures_path();

nlohmann::json load_fixtures();

ModelParams params_from_json(const nlohmann::json& j);
nlohmann::json params_to_json(const ModelParams& p);

// Build the staged-sweep configuration from the fixtures document.
ScenarioConfig scenario_from_fixtures(const nlohmann::json& fx);

}  // namespace qbl
