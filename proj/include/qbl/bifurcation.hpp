#pragma once

#include <map>
#include <string>
#include <vector>

#include "qbl/dynamics.hpp"
#include "qbl/equilibria.hpp"
#include "qbl/params.hpp"

namespace qbl {

enum class EventKind {
  hopf,
  fold_of_cycles,
  homoclinic_small_loop,
  homoclinic_big_loop,
  eight_loop,
  cycle_from_infinity_candidate
};
const char* to_string(EventKind k);

struct BifurcationEvent {
  EventKind kind = EventKind::hopf;
  std::string parameter;      // "alpha", "beta", or "gamma"
  double value = 0.0;
  PhasePoint subject{};       // equilibrium or a point on the cycle
  std::map<std::string, double> diagnostics;
};

// Read/write one of the three scan parameters by name.
double get_param(const ModelParams& p, const std::string& name);
ModelParams with_param(const ModelParams& p, const std::string& name, double v);

struct HopfOptions {
  int samples = 400;
  double bisect_tol = 1e-10;
};

std::vector<BifurcationEvent> hopf_detect(const ModelParams& p,
                                          const Equilibrium& eq,
                                          const std::string& parameter,
                                          double lo, double hi,
                                          const HopfOptions& opt = {});

enum class BranchTermination { fold, homoclinic, parameter_bound, lost };
const char* to_string(BranchTermination t);

struct BranchSample {
  double value = 0.0;
  LimitCycle cycle;
};

struct CycleBranch {
  std::string parameter;
  std::vector<BranchSample> samples;
  BranchTermination termination = BranchTermination::parameter_bound;
  std::map<std::string, double> diagnostics;
};

struct ContinuationPolicy {
  double to = 0.0;              // parameter bound the branch runs toward
  double initial_step = 0.0;    // default: 1e-3 of the range
  double min_step_rel = 1e-8;   // of |to - from|
  double max_step_rel = 1e-2;
  double period_cap = 1e3;
  double loop_saddle_dist = 1e-3;
  int max_samples = 4000;
  ScanOptions scan;             // tolerances for per-step refinement
};

CycleBranch continue_cycle(const ModelParams& p, const LimitCycle& c,
                           const std::string& parameter,
                           const ContinuationPolicy& policy);

struct FoldOptions {
  double param_tol = 1e-7;
  ScanOptions scan;
};

BifurcationEvent detect_fold(const ModelParams& p, const CycleBranch& b1,
                             const CycleBranch& b2, const FoldOptions& opt = {});

struct HomoclinicOptions {
  int samples = 120;
  double param_tol = 1e-8;
  double transversal_dist_rel = 1e-2;
  // One loop plus two slow saddle passages fit well inside this horizon;
  // anything longer is a shot that is not coming back.
  SeparatrixOptions shoot{.integrate = {}, .t_span = 150.0, .eps_rel = 1e-6};
};

std::vector<BifurcationEvent> homoclinic_scan(const ModelParams& p,
                                              const Equilibrium& saddle,
                                              const std::string& parameter,
                                              double lo, double hi,
                                              const HomoclinicOptions& opt = {});

// ---------------------------------------------------------------------------
// Staged sweep harness
// ---------------------------------------------------------------------------

struct ScenarioStageConfig {
  ModelParams base = ModelParams::make(0, 0, 0.5, 1.0, 1.0, 0.0);
  std::string parameter;  // swept parameter for stages (ii)-(iv)
  double from = 0.0, to = 0.0;
  int samples = 0;
  double outer_radius = 0.0;  // outer section length; 0 = auto
};

struct ScenarioConfig {
  // stage (i): grid over (delta, lambda, mu) at alpha=beta=gamma=0
  int quad_grid = 12;
  double delta_range[2] = {0.1, 1.4};
  double lambda_range[2] = {0.25, 2.0};
  double mu_range[2] = {0.15, 2.0};
  ScenarioStageConfig beta_stage;    // (ii) cubic, beta < 0 sweep
  ScenarioStageConfig alpha_stage;   // (iii) quartic, alpha > 0 sweep
  ScenarioStageConfig gamma_stage;   // (iv) rotation sweep
  ScanOptions scan = sweep_scan_options();
};

struct StageLog {
  std::string name;
  int samples = 0;
  int max_total = 0;
  int max_concentric = 0;
  std::vector<BifurcationEvent> events;
};

struct ScenarioReport {
  std::vector<StageLog> stages;
  int total_samples = 0;
  int max_simultaneous = 0;
  int max_concentric = 0;
  bool breach = false;
  ModelParams breach_params = ModelParams::make(0, 0, 1, 1, 1, 0);
  std::string breach_note;
};

ScenarioReport run_scenario(const ScenarioConfig& config);

// Count simultaneous limit cycles at one parameter point by scanning
// sections anchored at every interior antisaddle, deduplicating cycles seen
// from several sections. Used by the scenario and the sweep command.
struct CycleCount {
  int total = 0;
  int max_concentric = 0;
  bool outward_at_rim = false;  // displacement map points outward at the
                                // largest scan radius (unbounded candidate)
  std::vector<LimitCycle> cycles;
};

CycleCount count_cycles(const ModelParams& p, bool rotated,
                        const ScanOptions& scan, double outer_radius = 0.0);

}  // namespace qbl
