#pragma once

#include <vector>

#include "qbl/params.hpp"
#include "qbl/polynomial.hpp"

namespace qbl {

// Charts covering the circle at infinity: 'u' looks along the x directions
// (u = y/x, z = 1/x), 'v' along the y directions (v = x/y, w = 1/y).
enum class Chart { u, v };

enum class InfiniteClass {
  node,
  saddle,
  saddle_node,
  triple_node,
  other_degenerate,
};

struct InfiniteSingularity {
  Chart chart = Chart::u;
  double coordinate = 0.0;
  int multiplicity = 1;
  InfiniteClass type = InfiniteClass::node;           // verdict on the z>0 side
  InfiniteClass negative_side = InfiniteClass::node;  // diagnostic: z<0 side
};

// Induced polynomial fields in each chart after the usual time rescale by
// z^(1-d) (d = stage degree). The equator z=0 (w=0) is invariant; equator
// equilibria are the directions at infinity. On the z<0 side the rescale
// reverses time for even d; verdicts there are reported as computed on the
// induced field.
Vec2 u_chart_field(const ModelParams& p, Vec2 uz);
Vec2 v_chart_field(const ModelParams& p, Vec2 vw);

// Direction polynomials whose roots are the equator equilibria, with the
// stage-dependent closed forms. Ascending coefficients.
Poly u_direction_poly(const ModelParams& p);
Poly v_direction_poly(const ModelParams& p);

// Classify one equator point. Hyperbolic points use the (triangular) chart
// Jacobian; degenerate ones use trajectory-sector sampling on half-discs of
// radii 1e-3 and 1e-4 with 64 rays, requiring agreement between the radii.
InfiniteClass classify_infinite(const ModelParams& p, Chart chart, double coordinate,
                                int multiplicity, InfiniteClass* negative_side = nullptr);

// All directions at infinity with multiplicities and types. Directions
// visible in both charts are stored once, in the u chart; the v=0 direction
// (the y-axis ends) is the only v-chart entry. Sorted by chart then
// coordinate.
std::vector<InfiniteSingularity> infinite_census(const ModelParams& p);

const char* to_string(InfiniteClass c);

}  // namespace qbl
