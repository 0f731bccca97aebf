#pragma once

#include <limits>
#include <vector>

#include "qbl/equilibria.hpp"
#include "qbl/integrate.hpp"
#include "qbl/params.hpp"

namespace qbl {

// A transversal segment, parameterized by arc length s in (0, length].
struct Section {
  PhasePoint anchor;
  Vec2 direction;   // unit vector
  double length = 1.0;
  int orientation = +1;  // required sign of normal() . field at a crossing

  Vec2 normal() const { return direction.perp(); }
  PhasePoint at(double s) const { return anchor + direction * s; }
  double side(PhasePoint q) const { return normal().dot(q - anchor); }
  double arc(PhasePoint q) const { return direction.dot(q - anchor); }
};

// Horizontal ray from an anchor (typically a focus); the crossing
// orientation is read off the field at mid-ray.
Section section_from(const ModelParams& p, PhasePoint anchor, double length,
                     bool rotated = false);

struct ReturnOptions {
  IntegrateOptions integrate;
  double t_limit = 1e4;
  double overshoot_factor = 1.0;  // accept crossings with s' <= factor*length
  bool record_loop = false;
};

struct ReturnHit {
  double s_out = 0.0;
  double t_flight = 0.0;
  bool overshoot = false;  // s_out beyond the section length
  std::vector<PhasePoint> loop;
  std::vector<double> loop_t;
};

// First same-orientation crossing of the section by the orbit started at
// arc parameter s. Throws "no return" when the orbit leaves, is captured,
// or exceeds the time limit without crossing.
ReturnHit return_hit(const ModelParams& p, const Section& sec, double s,
                     bool rotated, const ReturnOptions& opt = {});
double return_map(const ModelParams& p, const Section& sec, double s,
                  bool rotated, const ReturnOptions& opt = {});

enum class CycleStability { stable, unstable, semi_stable };
const char* to_string(CycleStability s);

struct LimitCycle {
  Section section;
  bool rotated = false;
  double s_star = 0.0;
  double period = 0.0;
  double derivative = 0.0;  // return-map slope at s_star
  CycleStability stability = CycleStability::stable;
  std::vector<PhasePoint> loop;
  double divergence_multiplier = std::numeric_limits<double>::quiet_NaN();
};

struct ScanOptions {
  ReturnOptions returns;
  int grid = 200;
  double fix_tol_rel = 1e-8;       // |d(s*)| <= rel * length
  double tangency_rel = 1e-6;      // near-tangency flag threshold
  double deriv_step_rel = 1e-5;    // central-difference relative step
  double stability_band = 1e-3;    // semi-stable band around derivative 1
  bool check_index = true;         // verify loop winding = +1
};

// Preset with tolerances loose enough for dense parameter sweeps.
ScanOptions sweep_scan_options();

std::vector<LimitCycle> find_cycles(const ModelParams& p, const Section& sec,
                                    bool rotated, const ScanOptions& opt = {});

// Re-derive stability two independent ways (Richardson return-map slope and
// the exponential of the divergence integral around the loop). Throws when
// the classifications disagree.
LimitCycle cycle_stability(const ModelParams& p, const LimitCycle& c,
                           const ScanOptions& opt = {});

struct Separatrix {
  Orbit orbit;
  Vec2 eigenvector;
  int sign = +1;       // which side of the saddle the branch leaves from
  bool unstable = true;
};

struct SeparatrixOptions {
  IntegrateOptions integrate;
  double t_span = 1e3;
  double eps_rel = 1e-6;
};

std::vector<Separatrix> separatrices(const ModelParams& p,
                                     const Equilibrium& saddle, bool rotated,
                                     const SeparatrixOptions& opt = {});

// Ray-cast point-in-polygon test for sampled closed curves.
bool encloses(const std::vector<PhasePoint>& loop, PhasePoint q);

}  // namespace qbl
