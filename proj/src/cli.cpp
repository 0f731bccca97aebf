#include "qbl/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qbl/bifurcation.hpp"
#include "qbl/compactification.hpp"
#include "qbl/dynamics.hpp"
#include "qbl/emit.hpp"
#include "qbl/equilibria.hpp"
#include "qbl/error.hpp"
#include "qbl/fixtures.hpp"
#include "qbl/model.hpp"

namespace qbl {

namespace {

constexpr int kOk = 0, kUsage = 1, kVerifyFail = 2, kNumeric = 3;

struct Cli {
  double alpha = 0.0, beta = 0.0, delta = 0.5, lambda = 1.0, mu = 1.0,
         gamma = 0.0;
  std::string out;
  std::string format = "json";
  double rtol = 0.0, atol = 0.0;  // 0 = module defaults
  bool sweep_grade = false;

  ModelParams params() const {
    return ModelParams::unchecked_beta(alpha, beta, delta, lambda, mu, gamma);
  }

  ScanOptions scan() const {
    ScanOptions s = sweep_grade ? sweep_scan_options() : ScanOptions{};
    if (rtol > 0.0) s.returns.integrate.rtol = rtol;
    if (atol > 0.0) s.returns.integrate.atol = atol;
    return s;
  }

  int write(const std::string& text) const {
    if (out.empty()) {
      std::cout << text;
      return kOk;
    }
    std::ofstream f(out);
    if (!f) {
      std::cerr << "cannot open output file: " << out << "\n";
      return kUsage;
    }
    f << text;
    return kOk;
  }
};

std::optional<PhasePoint> first_interior_antisaddle(const Census& c) {
  for (const Equilibrium& e : c.finite) {
    if (is_antisaddle(e.classification) && e.location.x > 1e-9 &&
        e.location.y > 1e-9) {
      return e.location;
    }
  }
  return std::nullopt;
}

double auto_length(const Census& c) {
  double spread = 1.0;
  for (const Equilibrium& e : c.finite) spread = std::max(spread, e.location.norm());
  return 3.0 * (1.0 + spread);
}

int cmd_equilibria(const Cli& g, bool infinity_only) {
  const ModelParams p = g.params();
  const std::vector<InfiniteSingularity> inf = infinite_census(p);
  if (infinity_only) {
    nlohmann::ordered_json doc;
    doc["stage"] = to_string(stage_of(p));
    doc["infinite"] = nlohmann::ordered_json::array();
    for (const InfiniteSingularity& s : inf) {
      doc["infinite"].push_back({{"chart", s.chart == Chart::u ? "u" : "v"},
                                 {"coordinate", s.coordinate},
                                 {"multiplicity", s.multiplicity},
                                 {"type", to_string(s.type)},
                                 {"negative_side", to_string(s.negative_side)}});
    }
    return g.write(doc.dump(2) + "\n");
  }
  const Census c = full_census(p, true);
  const ConfigurationReport checks = verify_configuration(p, c, inf);
  return g.write(emit_census(p, c, inf, checks, g.format));
}

int cmd_portrait(const Cli& g, double x0, double x1, double y0, double y1,
                 bool with_cycles) {
  const ModelParams p = g.params();
  const Census c = full_census(p, true);
  PlotWindow w = default_window(p, c);
  if (x1 > x0) { w.x0 = x0; w.x1 = x1; }
  if (y1 > y0) { w.y0 = y0; w.y1 = y1; }
  std::vector<LimitCycle> cycles;
  if (with_cycles) {
    cycles = count_cycles(p, true, g.scan(), 0.0).cycles;
  }
  Cli out = g;
  if (out.out.empty()) out.out = "portrait.svg";
  return out.write(render_portrait(p, c, cycles, w));
}

int cmd_cycles(const Cli& g, double ax, double ay, double length,
               bool verify_stability) {
  const ModelParams p = g.params();
  const Census c = full_census(p, true);
  PhasePoint anchor{ax, ay};
  if (!(ax == ax) || (ax == 0.0 && ay == 0.0)) {
    const auto a = first_interior_antisaddle(c);
    if (!a) {
      std::cerr << "no interior antisaddle to anchor a section at\n";
      return kVerifyFail;
    }
    anchor = *a;
  }
  const double L = length > 0.0 ? length : auto_length(c);
  const Section sec = section_from(p, anchor, L, true);
  std::vector<LimitCycle> cycles = find_cycles(p, sec, true, g.scan());
  if (verify_stability) {
    for (LimitCycle& cyc : cycles) cyc = cycle_stability(p, cyc, g.scan());
  }
  if (g.format == "csv") {
    std::string text = "s_star,period,derivative,stability\n";
    for (const LimitCycle& cyc : cycles) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%.6g,%s\n", cyc.s_star,
                    cyc.period, cyc.derivative, to_string(cyc.stability));
      text += buf;
    }
    return g.write(text);
  }
  nlohmann::ordered_json doc;
  doc["anchor"] = {anchor.x, anchor.y};
  doc["length"] = L;
  doc["cycles"] = nlohmann::ordered_json::array();
  for (const LimitCycle& cyc : cycles) doc["cycles"].push_back(cycle_to_json(cyc));
  return g.write(doc.dump(2) + "\n");
}

int cmd_hopf(const Cli& g, const std::string& param, double from, double to) {
  const ModelParams p = g.params();
  const Census c = full_census(p, false);
  nlohmann::ordered_json doc;
  doc["parameter"] = param;
  doc["events"] = nlohmann::ordered_json::array();
  for (const Equilibrium& e : c.finite) {
    if (!is_antisaddle(e.classification)) continue;
    if (e.location.x < 1e-9 || e.location.y < 1e-9) continue;
    for (const BifurcationEvent& ev : hopf_detect(p, e, param, from, to)) {
      doc["events"].push_back(event_to_json(ev));
    }
  }
  return g.write(doc.dump(2) + "\n");
}

int cmd_continue(const Cli& g, const std::string& param, double to,
                 size_t cycle_index, double length) {
  const ModelParams p = g.params();
  const Census c = full_census(p, true);
  const auto a = first_interior_antisaddle(c);
  if (!a) {
    std::cerr << "no interior antisaddle to anchor a section at\n";
    return kVerifyFail;
  }
  const double L = length > 0.0 ? length : auto_length(c);
  const Section sec = section_from(p, *a, L, true);
  const std::vector<LimitCycle> cycles = find_cycles(p, sec, true, g.scan());
  if (cycle_index >= cycles.size()) {
    std::cerr << "cycle index " << cycle_index << " out of range ("
              << cycles.size() << " found)\n";
    return kVerifyFail;
  }
  ContinuationPolicy policy;
  policy.to = to;
  policy.scan = g.scan();
  const CycleBranch branch = continue_cycle(p, cycles[cycle_index], param, policy);
  if (g.format == "csv") return g.write(branch_csv(branch));
  nlohmann::ordered_json doc;
  doc["parameter"] = branch.parameter;
  doc["termination"] = to_string(branch.termination);
  doc["samples"] = nlohmann::ordered_json::array();
  for (const BranchSample& s : branch.samples) {
    nlohmann::ordered_json row = cycle_to_json(s.cycle);
    row["parameter_value"] = s.value;
    doc["samples"].push_back(std::move(row));
  }
  for (const auto& [k, v] : branch.diagnostics) doc["diagnostics"][k] = v;
  return g.write(doc.dump(2) + "\n");
}

int cmd_scenario(const Cli& g, const std::string& fixtures_override) {
  if (!fixtures_override.empty()) setenv("QBL_FIXTURES", fixtures_override.c_str(), 1);
  const nlohmann::json fx = load_fixtures();
  const ScenarioConfig cfg = scenario_from_fixtures(fx);
  const ScenarioReport rep = run_scenario(cfg);
  const int rc = g.write(scenario_to_json(rep).dump(2) + "\n");
  if (rc != kOk) return rc;
  return rep.breach ? kVerifyFail : kOk;
}

int cmd_verify(const Cli& g) {
  const ModelParams p = g.params();
  const Census c = full_census(p, true);
  const std::vector<InfiniteSingularity> inf = infinite_census(p);
  const ConfigurationReport checks = verify_configuration(p, c, inf);

  bool ok = checks.index_identity.verdict != CheckVerdict::fail &&
            checks.alternation.verdict != CheckVerdict::fail &&
            checks.quadrilateral.verdict != CheckVerdict::fail;

  nlohmann::ordered_json doc = census_to_json(p, c, inf, checks);
  doc["contour_indices"] = nlohmann::ordered_json::array();
  for (size_t i = 0; i < c.finite.size(); ++i) {
    nlohmann::ordered_json row;
    row["x"] = c.finite[i].location.x;
    row["y"] = c.finite[i].location.y;
    row["class_index"] = c.finite[i].index;
    try {
      const int widx = contour_index(p, index_circle(c, i), true);
      row["contour_index"] = widx;
      if (widx != c.finite[i].index) ok = false;
    } catch (const NumericError& e) {
      row["contour_index"] = nullptr;
      row["note"] = e.what();
    }
    doc["contour_indices"].push_back(std::move(row));
  }
  doc["verified"] = ok;
  const int rc = g.write(doc.dump(2) + "\n");
  if (rc != kOk) return rc;
  return ok ? kOk : kVerifyFail;
}

int cmd_sweep(const Cli& g, const std::string& param, double from, double to,
              int samples) {
  const ModelParams p = g.params();
  nlohmann::ordered_json doc;
  doc["parameter"] = param;
  doc["samples"] = nlohmann::ordered_json::array();
  int max_total = 0, max_conc = 0;
  bool verify_ok = true;
  const ScanOptions scan = g.sweep_grade ? g.scan() : sweep_scan_options();
  for (int i = 0; i < samples; ++i) {
    const double v = from + (to - from) * i / std::max(1, samples - 1);
    const ModelParams pv = with_param(p, param, v);
    nlohmann::ordered_json row;
    row["value"] = v;
    try {
      const Census c = full_census(pv, true);
      const ConfigurationReport checks =
          verify_configuration(pv, c, infinite_census(pv));
      if (checks.index_identity.verdict == CheckVerdict::fail) {
        verify_ok = false;
        row["index_identity"] = "fail";
      }
      const CycleCount cc = count_cycles(pv, true, scan, 0.0);
      row["cycles"] = cc.total;
      row["max_concentric"] = cc.max_concentric;
      row["outward_at_rim"] = cc.outward_at_rim;
      max_total = std::max(max_total, cc.total);
      max_conc = std::max(max_conc, cc.max_concentric);
    } catch (const NumericError& e) {
      row["error"] = e.what();
    }
    doc["samples"].push_back(std::move(row));
  }
  doc["max_total"] = max_total;
  doc["max_concentric"] = max_conc;
  doc["verifications_passed"] = verify_ok;
  const int rc = g.write(doc.dump(2) + "\n");
  if (rc != kOk) return rc;
  return verify_ok ? kOk : kVerifyFail;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"quartic predator-prey bifurcation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; flags override");

  Cli g;
  app.add_option("--alpha", g.alpha, "response quadratic coefficient");
  app.add_option("--beta", g.beta, "response linear coefficient");
  app.add_option("--delta", g.delta, "predator loss constant")->check(CLI::PositiveNumber);
  app.add_option("--lambda", g.lambda, "prey logistic coefficient")->check(CLI::PositiveNumber);
  app.add_option("--mu", g.mu, "predator density loss")->check(CLI::NonNegativeNumber);
  app.add_option("--gamma", g.gamma, "field rotation parameter");
  app.add_option("--out", g.out, "output path (default stdout)");
  app.add_option("--format", g.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--rtol", g.rtol, "integrator relative tolerance override")
      ->check(CLI::Range(1e-14, 1e-2));
  app.add_option("--atol", g.atol, "integrator absolute tolerance override")
      ->check(CLI::Range(1e-14, 1e-2));
  app.add_flag("--sweep-grade", g.sweep_grade,
               "loose tolerances tuned for dense sweeps");

  // env hook reserved for stochastic jitter; current sweeps are deterministic
  [[maybe_unused]] const char* seed = std::getenv("QBL_SEED");

  auto* eq = app.add_subcommand("equilibria", "finite + infinite census with checks");
  auto* infc = app.add_subcommand("infinity", "singular points at infinity");
  auto* por = app.add_subcommand("portrait", "SVG phase portrait");
  double x0 = 0, x1 = -1, y0 = 0, y1 = -1;
  bool with_cycles = false;
  por->add_option("--x0", x0, "window left");
  por->add_option("--x1", x1, "window right");
  por->add_option("--y0", y0, "window bottom");
  por->add_option("--y1", y1, "window top");
  por->add_flag("--with-cycles", with_cycles, "overlay detected limit cycles");

  auto* cyc = app.add_subcommand("cycles", "locate limit cycles on a section");
  double ax = std::nan(""), ay = 0.0, length = 0.0;
  bool verify_stab = false;
  cyc->add_option("--anchor-x", ax, "section anchor x (default: first interior antisaddle)");
  cyc->add_option("--anchor-y", ay, "section anchor y");
  cyc->add_option("--length", length, "section length (default: auto)");
  cyc->add_flag("--verify-stability", verify_stab,
                "cross-check each cycle's stability two ways");

  auto* hop = app.add_subcommand("hopf", "trace-zero scan at interior antisaddles");
  std::string hopf_param = "gamma";
  double hopf_from = -2.0, hopf_to = 2.0;
  hop->add_option("--param", hopf_param)->check(CLI::IsMember({"alpha", "beta", "gamma"}));
  hop->add_option("--from", hopf_from, "scan start");
  hop->add_option("--to", hopf_to, "scan end");

  auto* con = app.add_subcommand("continue", "continue a cycle in a parameter");
  std::string cont_param = "gamma";
  double cont_to = 0.0;
  size_t cont_index = 0;
  double cont_length = 0.0;
  con->add_option("--param", cont_param)->check(CLI::IsMember({"alpha", "beta", "gamma"}));
  con->add_option("--to", cont_to, "parameter bound")->required();
  con->add_option("--cycle-index", cont_index, "which detected cycle to continue");
  con->add_option("--length", cont_length, "section length (default: auto)");

  auto* sce = app.add_subcommand("scenario", "staged sweep from the fixtures file");
  std::string fixtures_override;
  sce->add_option("--fixtures", fixtures_override, "fixtures file path");

  auto* ver = app.add_subcommand("verify", "census checks + contour-index cross-check");

  auto* swe = app.add_subcommand("sweep", "per-sample cycle counts over a range");
  std::string sweep_param = "gamma";
  double sweep_from = 0.0, sweep_to = 1.0;
  int sweep_samples = 50;
  swe->add_option("--param", sweep_param)->check(CLI::IsMember({"alpha", "beta", "gamma"}));
  swe->add_option("--from", sweep_from)->required();
  swe->add_option("--to", sweep_to)->required();
  swe->add_option("--samples", sweep_samples)->check(CLI::Range(2, 1000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*eq) return cmd_equilibria(g, false);
    if (*infc) return cmd_equilibria(g, true);
    if (*por) return cmd_portrait(g, x0, x1, y0, y1, with_cycles);
    if (*cyc) return cmd_cycles(g, ax, ay, length, verify_stab);
    if (*hop) return cmd_hopf(g, hopf_param, hopf_from, hopf_to);
    if (*con) return cmd_continue(g, cont_param, cont_to, cont_index, cont_length);
    if (*sce) return cmd_scenario(g, fixtures_override);
    if (*ver) return cmd_verify(g);
    if (*swe) return cmd_sweep(g, sweep_param, sweep_from, sweep_to, sweep_samples);
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace qbl
