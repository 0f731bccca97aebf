#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qbl/compactification.hpp"
#include "qbl/model.hpp"
#include "qbl/params.hpp"

namespace qbl {

enum class EquilibriumClass {
  saddle,
  stable_node,
  unstable_node,
  stable_focus,
  unstable_focus,
  center_or_weak_focus,
  saddle_node,
  degenerate,
};

const char* to_string(EquilibriumClass c);
bool is_antisaddle(EquilibriumClass c);

struct Equilibrium {
  PhasePoint location;
  EquilibriumClass classification = EquilibriumClass::degenerate;
  Jacobian2::Eigenvalues eigenvalues{};
  int index = 0;        // -1 saddle, +1 antisaddle, 0 otherwise
  double residual = 0;  // |field| after polishing
};

struct Census {
  std::vector<Equilibrium> finite;  // sorted by x, then y
};

// Classification from a Jacobian. An eigenvalue counts as zero when
// |eig| < 1e-6 * max(1, |other|); a complex pair with
// |trace| < 1e-8 * (1 + |det|) is reported center-or-weak-focus.
EquilibriumClass classify(const Jacobian2& j);
int index_of(EquilibriumClass c);

// Equilibria on the coordinate axes, closed-form: (0,0), (1/lambda,0),
// (0,-delta/mu) when mu>0, and the real roots of the response denominator
// paired with y=0 (two, one double, or one when the denominator is linear).
std::vector<PhasePoint> axis_equilibria(const ModelParams& p);

// Off-axis equilibria: real roots of the substituted isocline polynomial
// (coefficients derived symbolically from p; the 1 - lambda*x factor is
// deflated analytically), each polished by a 2D Newton on the isocline pair
// and deduplicated against the axis set.
std::vector<PhasePoint> interior_equilibria(const ModelParams& p);

// Merged, polished, classified census of the finite plane for the base
// (rotated=false) or rotated field. Points within 1e-7*(1+scale) merge.
Census full_census(const ModelParams& p, bool rotated);

// Winding number of the field along a closed polyline (vertices in order;
// the closing edge is implicit). Throws when the field nearly vanishes on a
// vertex or when the angle sum is far from an integer multiple of 2*pi.
int contour_index(const ModelParams& p, const std::vector<PhasePoint>& polyline,
                  bool rotated);

// A circle suitable for contour_index around one census point: radius
// min(1e-3*(1+|pt|), half the distance to the nearest other point).
std::vector<PhasePoint> index_circle(const Census& c, size_t which, int vertices = 256);

enum class CheckVerdict { pass, fail, inapplicable };

struct CheckResult {
  CheckVerdict verdict = CheckVerdict::inapplicable;
  std::string detail;
};

struct ConfigurationReport {
  CheckResult index_identity;   // finite/infinite saddle-antisaddle balance
  CheckResult alternation;      // saddle/antisaddle alternation along isocline branches
  CheckResult quadrilateral;    // 4-point configuration rule, quadratic stage only
};

// Structural checks tying the finite census to the directions at infinity.
ConfigurationReport verify_configuration(const ModelParams& p, const Census& c,
                                         const std::vector<InfiniteSingularity>& inf);

}  // namespace qbl
