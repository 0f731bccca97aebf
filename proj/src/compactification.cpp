#include "qbl/compactification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "qbl/error.hpp"

namespace qbl {

namespace {

// z^(d-2) * A(1/z): the reversed denominator for the u chart.
double reversed_denom(const ModelParams& p, double z, Stage s) {
  switch (s) {
    case Stage::quartic: return (z + p.beta) * z + p.alpha;
    case Stage::cubic: return p.beta + z;
    default: return 1.0;
  }
}

// Homogenized denominator for the v chart: w^(d-2) * A(v/w).
double homog_denom(const ModelParams& p, double v, double w, Stage s) {
  switch (s) {
    case Stage::quartic: return p.alpha * v * v + p.beta * v * w + w * w;
    case Stage::cubic: return p.beta * v + w;
    default: return 1.0;
  }
}

double int_pow(double x, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= x;
  return r;
}

}  // namespace

Vec2 u_chart_field(const ModelParams& p, Vec2 uz) {
  const Stage s = stage_of(p);
  const int m = stage_degree(s) - 2;
  const double u = uz.x, z = uz.y;
  const double at = reversed_denom(p, z, s);
  const double zm = int_pow(z, m);
  const double pt = (z - p.lambda) * at - u * zm;
  const double qt = u * (zm - (p.delta * z + p.mu * u) * at);
  return {qt - u * pt, -z * pt};
}

Vec2 v_chart_field(const ModelParams& p, Vec2 vw) {
  const Stage s = stage_of(p);
  const int m = stage_degree(s) - 2;
  const double v = vw.x, w = vw.y;
  const double ah = homog_denom(p, v, w, s);
  const double wm = int_pow(w, m);
  const double pv = v * (w - p.lambda * v) * ah - v * wm;
  const double qv = -(p.delta * w + p.mu) * ah + v * wm;
  return {pv - v * qv, -w * qv};
}

Poly u_direction_poly(const ModelParams& p) {
  switch (stage_of(p)) {
    case Stage::quadratic: return {0.0, 1.0 + p.lambda, 1.0 - p.mu};
    default: return {0.0, -p.lambda, p.mu};  // same shape for cubic/quartic
  }
}

Poly v_direction_poly(const ModelParams& p) {
  switch (stage_of(p)) {
    case Stage::quadratic: return {0.0, 1.0 - p.mu, 1.0 + p.lambda};
    case Stage::cubic: return {0.0, 0.0, -p.mu, p.lambda};
    default: return {0.0, 0.0, 0.0, -p.mu, p.lambda};
  }
}

namespace {

// Closed-form eigenvalues of the chart Jacobian at an equator point. The
// Jacobian there is upper triangular (the z-row derivative wrt the equator
// coordinate vanishes), so the eigenvalues are the tangential and the
// transversal diagonal entries.
struct ChartEigs {
  double tangential;
  double transversal;
};

ChartEigs u_chart_eigs(const ModelParams& p, double u0) {
  switch (stage_of(p)) {
    case Stage::quartic:
      return {p.alpha * (p.lambda - 2.0 * p.mu * u0), p.lambda * p.alpha};
    case Stage::cubic:
      return {p.beta * (p.lambda - 2.0 * p.mu * u0), p.lambda * p.beta};
    default:
      return {(1.0 + p.lambda) + 2.0 * (1.0 - p.mu) * u0, p.lambda + u0};
  }
}

ChartEigs v_chart_eigs(const ModelParams& p, double v0) {
  switch (stage_of(p)) {
    case Stage::quartic:
      return {p.alpha * v0 * v0 * (3.0 * p.mu - 4.0 * p.lambda * v0),
              p.mu * p.alpha * v0 * v0};
    case Stage::cubic:
      return {p.beta * v0 * (2.0 * p.mu - 3.0 * p.lambda * v0), p.mu * p.beta * v0};
    default:
      return {(p.mu - 1.0) - 2.0 * (1.0 + p.lambda) * v0, p.mu - v0};
  }
}

enum class RayFate { converges_forward, converges_backward, passes, stuck };

// Follow the direction field (unit-normalized induced field) from a point on
// the sampling circle until it either closes in on the singular point or
// leaves its neighbourhood.
template <typename F>
RayFate trace_ray(const F& field, Vec2 center, Vec2 start, double r) {
  auto run = [&](double sign) {
    Vec2 pt = start;
    const double h = r / 60.0;
    for (int step = 0; step < 20000; ++step) {
      const Vec2 f = field(pt);
      const double n = f.norm();
      if (n < 1e-300) return 2;  // parked on an equilibrium
      // midpoint rule on the normalized field
      const Vec2 mid = pt + f * (sign * 0.5 * h / n);
      const Vec2 fm = field(mid);
      const double nm = fm.norm();
      if (nm < 1e-300) return 2;
      Vec2 next = pt + fm * (sign * h / nm);
      const double dist = (next - center).norm();
      if (dist < 0.05 * r) return 1;  // converged to the point
      if (dist > 2.5 * r) return 0;   // left the neighbourhood
      pt = next;
    }
    return 2;  // wandered (monodromic or very slow): treat as stuck
  };
  const int fwd = run(+1.0);
  if (fwd == 2) return RayFate::stuck;
  const int bwd = run(-1.0);
  if (bwd == 2) return RayFate::stuck;
  if (fwd == 1 && bwd != 1) return RayFate::converges_forward;
  if (bwd == 1 && fwd != 1) return RayFate::converges_backward;
  if (fwd == 0 && bwd == 0) return RayFate::passes;
  return RayFate::stuck;  // converges both ways: cannot happen for honest rays
}

enum class HalfVerdict { attracting, repelling, passing, mixed_in, mixed_out, other };

// Sample one half-disc (side=+1 for z>0) at one radius.
template <typename F>
HalfVerdict half_disc_verdict(const F& field, Vec2 center, double r, int side) {
  constexpr int kRays = 64;
  std::array<char, kRays> fate{};
  int n_f = 0, n_b = 0, n_p = 0;
  for (int k = 0; k < kRays; ++k) {
    const double theta = M_PI * (k + 0.5) / kRays;
    const Vec2 start{center.x + r * std::cos(theta),
                     center.y + side * r * std::sin(theta)};
    switch (trace_ray(field, center, start, r)) {
      case RayFate::converges_forward: fate[k] = 'F'; ++n_f; break;
      case RayFate::converges_backward: fate[k] = 'B'; ++n_b; break;
      case RayFate::passes: fate[k] = 'P'; ++n_p; break;
      default: fate[k] = '?'; break;
    }
  }
  if (n_f >= kRays - 4) return HalfVerdict::attracting;
  if (n_b >= kRays - 4) return HalfVerdict::repelling;
  if (n_p >= kRays - 4) return HalfVerdict::passing;

  // Compress into blocks, merging runt blocks (noise near sector borders).
  std::vector<std::pair<char, int>> blocks;
  for (char c : fate) {
    if (!blocks.empty() && blocks.back().first == c) blocks.back().second++;
    else blocks.emplace_back(c, 1);
  }
  std::vector<std::pair<char, int>> major;
  for (auto& b : blocks) {
    if (b.second >= 4 && b.first != '?') major.push_back(b);
    // short or unknown runs are absorbed by whichever neighbour follows
  }
  std::vector<std::pair<char, int>> merged;
  for (auto& b : major) {
    if (!merged.empty() && merged.back().first == b.first)
      merged.back().second += b.second;
    else
      merged.push_back(b);
  }
  auto is = [&](const char* pattern) {
    const size_t len = std::strlen(pattern);
    if (merged.size() != len) return false;
    for (size_t i = 0; i < len; ++i)
      if (merged[i].first != pattern[i]) return false;
    return true;
  };
  if (is("FP") || is("PF") || is("PFP")) return HalfVerdict::mixed_in;
  if (is("BP") || is("PB") || is("PBP")) return HalfVerdict::mixed_out;
  return HalfVerdict::other;
}

InfiniteClass verdict_to_class(HalfVerdict v, int multiplicity) {
  switch (v) {
    case HalfVerdict::attracting:
    case HalfVerdict::repelling:
      if (multiplicity == 1) return InfiniteClass::node;
      if (multiplicity == 3) return InfiniteClass::triple_node;
      return InfiniteClass::other_degenerate;
    case HalfVerdict::passing:
      return multiplicity == 1 ? InfiniteClass::saddle
                               : InfiniteClass::other_degenerate;
    case HalfVerdict::mixed_in:
    case HalfVerdict::mixed_out:
      return multiplicity == 2 ? InfiniteClass::saddle_node
                               : InfiniteClass::other_degenerate;
    default:
      return InfiniteClass::other_degenerate;
  }
}

}  // namespace

InfiniteClass classify_infinite(const ModelParams& p, Chart chart, double coordinate,
                                int multiplicity, InfiniteClass* negative_side) {
  const ChartEigs eigs = chart == Chart::u ? u_chart_eigs(p, coordinate)
                                           : v_chart_eigs(p, coordinate);
  const double scale =
      std::max({1e-12, std::abs(eigs.tangential), std::abs(eigs.transversal)});
  const bool hyperbolic =
      std::min(std::abs(eigs.tangential), std::abs(eigs.transversal)) >
      1e-8 * scale;

  if (hyperbolic) {
    const InfiniteClass c = (eigs.tangential * eigs.transversal < 0.0)
                                ? InfiniteClass::saddle
                                : InfiniteClass::node;
    if (negative_side) *negative_side = c;
    return c;
  }

  auto field = [&](Vec2 q) {
    return chart == Chart::u ? u_chart_field(p, q) : v_chart_field(p, q);
  };
  const Vec2 center{coordinate, 0.0};
  InfiniteClass pos{}, neg{};
  for (int pass = 0; pass < 2; ++pass) {
    const int side = pass == 0 ? +1 : -1;
    const HalfVerdict va = half_disc_verdict(field, center, 1e-3, side);
    const HalfVerdict vb = half_disc_verdict(field, center, 1e-4, side);
    if (va != vb) {
      throw NumericError(ErrorCode::unclassifiable,
                         "sector sampling disagrees between radii");
    }
    (side > 0 ? pos : neg) = verdict_to_class(va, multiplicity);
  }
  if (negative_side) *negative_side = neg;
  return pos;
}

std::vector<InfiniteSingularity> infinite_census(const ModelParams& p) {
  const Stage s = stage_of(p);

  const Poly up = poly_trim(u_direction_poly(p), 0.0);
  const Poly vp = poly_trim(v_direction_poly(p), 0.0);
  if (up.size() <= 1 || vp.size() <= 1) {
    throw NumericError(ErrorCode::degenerate_chart,
                       "direction polynomial degenerates to a constant");
  }

  struct Root {
    Chart chart;
    double coord;
    int mult;
  };
  std::vector<Root> roots;

  // u-chart roots, closed forms per stage.
  if (s == Stage::quadratic) {
    roots.push_back({Chart::u, 0.0, 1});
    if (p.mu != 1.0)
      roots.push_back({Chart::u, (1.0 + p.lambda) / (p.mu - 1.0), 1});
  } else {
    roots.push_back({Chart::u, 0.0, 1});
    if (p.mu != 0.0) roots.push_back({Chart::u, p.lambda / p.mu, 1});
  }

  // v = 0 (the y-axis ends), with its stage-dependent multiplicity. Nonzero
  // v-chart roots coincide with u-chart roots (v = 1/u) and are not repeated.
  int v0_mult = 1;
  switch (s) {
    case Stage::quadratic: v0_mult = (p.mu == 1.0) ? 2 : 1; break;
    case Stage::cubic: v0_mult = (p.mu == 0.0) ? 3 : 2; break;
    default: v0_mult = (p.mu == 0.0) ? 4 : 3; break;
  }
  roots.push_back({Chart::v, 0.0, v0_mult});

  std::vector<InfiniteSingularity> out;
  for (const Root& r : roots) {
    InfiniteSingularity pt;
    pt.chart = r.chart;
    pt.coordinate = r.coord;
    pt.multiplicity = r.mult;
    pt.type = classify_infinite(p, r.chart, r.coord, r.mult, &pt.negative_side);
    out.push_back(pt);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.chart != b.chart) return a.chart == Chart::u;
    return a.coordinate < b.coordinate;
  });
  return out;
}

const char* to_string(InfiniteClass c) {
  switch (c) {
    case InfiniteClass::node: return "node";
    case InfiniteClass::saddle: return "saddle";
    case InfiniteClass::saddle_node: return "saddle-node";
    case InfiniteClass::triple_node: return "triple-node";
    default: return "other-degenerate";
  }
}

}  // namespace qbl
