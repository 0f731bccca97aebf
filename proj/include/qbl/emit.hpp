#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qbl/bifurcation.hpp"
#include "qbl/compactification.hpp"
#include "qbl/dynamics.hpp"
#include "qbl/equilibria.hpp"
#include "qbl/params.hpp"

namespace qbl {

struct PlotWindow {
  double x0 = -0.5, x1 = 2.0;
  double y0 = -0.5, y1 = 2.0;
  int width = 720, height = 540;
};

// Frames every finite singular point of interest, including (0, -delta/mu).
PlotWindow default_window(const ModelParams& p, const Census& c);

nlohmann::ordered_json census_to_json(const ModelParams& p, const Census& c,
                                      const std::vector<InfiniteSingularity>& inf,
                                      const ConfigurationReport& checks);
std::string emit_census(const ModelParams& p, const Census& c,
                        const std::vector<InfiniteSingularity>& inf,
                        const ConfigurationReport& checks,
                        const std::string& format);

// Rebuild the finite census from its JSON emission (serialization identity).
Census census_from_json(const nlohmann::json& doc);

std::string render_portrait(const ModelParams& p, const Census& c,
                            const std::vector<LimitCycle>& cycles,
                            const PlotWindow& window);

std::string branch_csv(const CycleBranch& b);
nlohmann::ordered_json event_to_json(const BifurcationEvent& e);
nlohmann::ordered_json cycle_to_json(const LimitCycle& c);
nlohmann::ordered_json scenario_to_json(const ScenarioReport& r);

}  // namespace qbl
