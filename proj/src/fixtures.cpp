#include "qbl/fixtures.hpp"

#include <cstdlib>
#include <fstream>

namespace qbl {

namespace {
bool readable(const std::string& path) {
  std::ifstream f(path);
  return f.good();
}
}  // namespace

std::string fixtures_path() {
  if (const char* env = std::getenv("QBL_FIXTURES")) {
    if (readable(env)) return env;
  }
  const std::string local = "fixtures/regimes.json";
  if (readable(local)) return local;
#ifdef QBL_SOURCE_ROOT
  const std::string tree = std::string(QBL_SOURCE_ROOT) + "/fixtures/regimes.json";
  if (readable(tree)) return tree;
#endif
  throw std::runtime_error(
      "fixtures file not found (set QBL_FIXTURES or provide fixtures/regimes.json)");
}

nlohmann::json load_fixtures() {
  std::ifstream f(fixtures_path());
  nlohmann::json j;
  f >> j;
  return j;
}

ModelParams params_from_json(const nlohmann::json& j) {
  return ModelParams::unchecked_beta(
      j.value("alpha", 0.0), j.value("beta", 0.0), j.at("delta").get<double>(),
      j.at("lambda").get<double>(), j.value("mu", 0.0), j.value("gamma", 0.0));
}

nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::ordered_json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["delta"] = p.delta;
  j["lambda"] = p.lambda;
  j["mu"] = p.mu;
  j["gamma"] = p.gamma;
  return j;
}

namespace {
ScenarioStageConfig stage_from(const nlohmann::json& j, const std::string& param) {
  ScenarioStageConfig s;
  s.base = params_from_json(j.at("base"));
  s.parameter = param;
  s.from = j.at("from").get<double>();
  s.to = j.at("to").get<double>();
  s.samples = j.at("samples").get<int>();
  s.outer_radius = j.value("outer_radius", 0.0);
  return s;
}
}  // namespace

ScenarioConfig scenario_from_fixtures(const nlohmann::json& fx) {
  const nlohmann::json& sc = fx.at("scenario");
  ScenarioConfig cfg;
  cfg.quad_grid = sc.value("quad_grid", 12);
  cfg.beta_stage = stage_from(sc.at("beta"), "beta");
  cfg.alpha_stage = stage_from(sc.at("alpha"), "alpha");
  cfg.gamma_stage = stage_from(sc.at("gamma"), "gamma");
  return cfg;
}

}  // namespace qbl
