#include "qbl/equilibria.hpp"

#include <algorithm>
#include <cmath>

#include "qbl/error.hpp"
#include "qbl/polynomial.hpp"

namespace qbl {

const char* to_string(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::saddle: return "saddle";
    case EquilibriumClass::stable_node: return "stable-node";
    case EquilibriumClass::unstable_node: return "unstable-node";
    case EquilibriumClass::stable_focus: return "stable-focus";
    case EquilibriumClass::unstable_focus: return "unstable-focus";
    case EquilibriumClass::center_or_weak_focus: return "center-or-weak-focus";
    case EquilibriumClass::saddle_node: return "saddle-node";
    default: return "degenerate";
  }
}

bool is_antisaddle(EquilibriumClass c) {
  switch (c) {
    case EquilibriumClass::stable_node:
    case EquilibriumClass::unstable_node:
    case EquilibriumClass::stable_focus:
    case EquilibriumClass::unstable_focus:
    case EquilibriumClass::center_or_weak_focus:
      return true;
    default:
      return false;
  }
}

EquilibriumClass classify(const Jacobian2& j) {
  const auto e = j.eigenvalues();
  if (e.complex_pair()) {
    if (std::abs(j.trace()) < 1e-8 * (1.0 + std::abs(j.det())))
      return EquilibriumClass::center_or_weak_focus;
    return j.trace() < 0.0 ? EquilibriumClass::stable_focus
                           : EquilibriumClass::unstable_focus;
  }
  const double a = e.re1, b = e.re2;
  const bool za = std::abs(a) < 1e-6 * std::max(1.0, std::abs(b));
  const bool zb = std::abs(b) < 1e-6 * std::max(1.0, std::abs(a));
  if (za && zb) return EquilibriumClass::degenerate;
  if (za || zb) return EquilibriumClass::saddle_node;
  if (a * b < 0.0) return EquilibriumClass::saddle;
  return a < 0.0 ? EquilibriumClass::stable_node : EquilibriumClass::unstable_node;
}

int index_of(EquilibriumClass c) {
  if (c == EquilibriumClass::saddle) return -1;
  if (is_antisaddle(c)) return 1;
  return 0;
}

std::vector<PhasePoint> axis_equilibria(const ModelParams& p) {
  std::vector<PhasePoint> pts;
  pts.push_back({0.0, 0.0});
  pts.push_back({1.0 / p.lambda, 0.0});
  if (p.mu > 0.0) pts.push_back({0.0, -p.delta / p.mu});

  // Real roots of the response denominator sit on y = 0.
  if (p.alpha > 0.0) {
    const double disc = p.beta * p.beta - 4.0 * p.alpha;
    if (disc > 0.0) {
      const double s = std::sqrt(disc);
      const double t = -0.5 * (p.beta + (p.beta >= 0.0 ? s : -s));
      pts.push_back({t / p.alpha, 0.0});
      pts.push_back({1.0 / t, 0.0});  // product of roots = 1/alpha
    } else if (disc == 0.0) {
      pts.push_back({-p.beta / (2.0 * p.alpha), 0.0});
    }
  } else if (p.beta != 0.0) {
    pts.push_back({-1.0 / p.beta, 0.0});
  }
  return pts;
}

namespace {

// Substituted isocline polynomial: plug y = (1-lambda*x)*A(x) into
// y*(delta+mu*y) - x*(1-lambda*x). The factor (1-lambda*x) is exact and is
// deflated before root finding.
Poly interior_poly_deflated(const ModelParams& p) {
  const Poly A{1.0, p.beta, p.alpha};
  const Poly L{1.0, -p.lambda};
  const Poly Y = poly_mul(L, A);
  Poly f = poly_scale(Y, p.delta);
  if (p.mu != 0.0) f = poly_add(f, poly_scale(poly_mul(Y, Y), p.mu));
  f = poly_add(f, poly_scale(Poly{0.0, 1.0, -p.lambda}, -1.0));
  return poly_trim(poly_div_linear(f, 1.0, -p.lambda), 1e-14);
}

bool close_points(PhasePoint a, PhasePoint b, double tol_scale) {
  const double scale = 1.0 + std::max(a.norm(), b.norm());
  return (a - b).norm() <= tol_scale * scale;
}

// One damped-free 2D Newton iteration set on an arbitrary residual pair.
template <typename FnF, typename FnJ>
PhasePoint newton_polish(PhasePoint pt, FnF f, FnJ jac, int iters) {
  for (int it = 0; it < iters; ++it) {
    const Vec2 r = f(pt);
    const Jacobian2 j = jac(pt);
    const double det = j.det();
    const double jnorm = std::abs(j.px) + std::abs(j.py) + std::abs(j.qx) +
                         std::abs(j.qy);
    if (std::abs(det) < 1e-14 * jnorm * jnorm + 1e-300) break;
    const double dx = (-r.x * j.qy + r.y * j.py) / det;
    const double dy = (-j.px * r.y + j.qx * r.x) / det;
    pt.x += dx;
    pt.y += dy;
    if (std::hypot(dx, dy) < 1e-16 * (1.0 + pt.norm())) break;
  }
  return pt;
}

}  // namespace

std::vector<PhasePoint> interior_equilibria(const ModelParams& p) {
  const Poly q = interior_poly_deflated(p);
  const std::vector<double> xs = real_roots(q);

  const std::vector<PhasePoint> axis = axis_equilibria(p);
  std::vector<PhasePoint> out;
  for (double x0 : xs) {
    PhasePoint pt{x0, prey_isocline(p, x0)};
    auto resid = [&](PhasePoint q2) -> Vec2 {
      return {q2.y - prey_isocline(p, q2.x), ellipse_residual(p, q2)};
    };
    auto jac = [&](PhasePoint q2) {
      Jacobian2 j;
      const double a = denom(p, q2.x);
      const double ap = denom_prime(p, q2.x);
      j.px = -(-p.lambda * a + (1.0 - p.lambda * q2.x) * ap);
      j.py = 1.0;
      j.qx = -(1.0 - 2.0 * p.lambda * q2.x);
      j.qy = p.delta + 2.0 * p.mu * q2.y;
      return j;
    };
    pt = newton_polish(pt, resid, jac, 12);

    const Vec2 r = resid(pt);
    const double bound = 1e-9 * (1.0 + pt.norm());
    if (std::abs(r.x) > bound || std::abs(r.y) > bound) continue;  // spurious

    bool dup = false;
    for (const PhasePoint& a : axis) dup = dup || close_points(pt, a, 1e-7);
    for (const PhasePoint& b : out) dup = dup || close_points(pt, b, 1e-7);
    if (!dup) out.push_back(pt);
  }
  std::sort(out.begin(), out.end(), [](PhasePoint a, PhasePoint b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  return out;
}

Census full_census(const ModelParams& p, bool rotated) {
  std::vector<PhasePoint> seeds = axis_equilibria(p);
  for (PhasePoint pt : interior_equilibria(p)) seeds.push_back(pt);

  auto fld = [&](PhasePoint pt) -> Vec2 {
    const FieldValue f =
        rotated ? eval_rotated_field(p, pt) : eval_field(p, pt);
    return {f.dx, f.dy};
  };
  auto jac = [&](PhasePoint pt) { return eval_jacobian(p, pt, rotated); };

  std::vector<Equilibrium> pts;
  for (PhasePoint seed : seeds) {
    PhasePoint pt = newton_polish(seed, fld, jac, 6);
    const double res = fld(pt).norm();
    if (res > 1e-9 * (1.0 + pt.norm())) {
      throw NumericError(ErrorCode::root_finding,
                         "equilibrium polish failed to reach residual bound");
    }
    bool merged = false;
    for (Equilibrium& e : pts) {
      if (close_points(pt, e.location, 1e-7)) {
        if (res < e.residual) {
          e.location = pt;
          e.residual = res;
        }
        merged = true;
        break;
      }
    }
    if (!merged) {
      Equilibrium e;
      e.location = pt;
      e.residual = res;
      pts.push_back(e);
    }
  }

  for (Equilibrium& e : pts) {
    const Jacobian2 j = jac(e.location);
    e.classification = classify(j);
    e.eigenvalues = j.eigenvalues();
    e.index = index_of(e.classification);
  }
  std::sort(pts.begin(), pts.end(), [](const Equilibrium& a, const Equilibrium& b) {
    return a.location.x != b.location.x ? a.location.x < b.location.x
                                        : a.location.y < b.location.y;
  });
  return Census{std::move(pts)};
}

int contour_index(const ModelParams& p, const std::vector<PhasePoint>& polyline,
                  bool rotated) {
  if (polyline.size() < 3) {
    throw std::invalid_argument("contour needs at least 3 vertices");
  }
  double total = 0.0;
  double prev = 0.0;
  bool have_prev = false;
  auto angle_at = [&](PhasePoint pt) {
    const FieldValue f =
        rotated ? eval_rotated_field(p, pt) : eval_field(p, pt);
    if (std::hypot(f.dx, f.dy) < 1e-12) {
      throw NumericError(ErrorCode::singular_on_contour,
                         "field vanishes on the contour");
    }
    return std::atan2(f.dy, f.dx);
  };
  const size_t n = polyline.size();
  for (size_t i = 0; i <= n; ++i) {
    const double th = angle_at(polyline[i % n]);
    if (have_prev) {
      double d = th - prev;
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d <= -M_PI) d += 2.0 * M_PI;
      if (std::abs(d) > M_PI - 1e-3) {
        throw NumericError(ErrorCode::ambiguous_winding,
                           "angle step too large; densify the contour");
      }
      total += d;
    }
    prev = th;
    have_prev = true;
  }
  const double turns = total / (2.0 * M_PI);
  const double nearest = std::round(turns);
  if (std::abs(turns - nearest) > 1e-3) {
    throw NumericError(ErrorCode::ambiguous_winding,
                       "winding sum far from an integer");
  }
  return int(nearest);
}

std::vector<PhasePoint> index_circle(const Census& c, size_t which, int vertices) {
  const PhasePoint ctr = c.finite.at(which).location;
  double r = 1e-3 * (1.0 + ctr.norm());
  for (size_t i = 0; i < c.finite.size(); ++i) {
    if (i == which) continue;
    r = std::min(r, 0.45 * (c.finite[i].location - ctr).norm());
  }
  std::vector<PhasePoint> poly;
  poly.reserve(vertices);
  for (int k = 0; k < vertices; ++k) {
    const double th = 2.0 * M_PI * k / vertices;
    poly.push_back({ctr.x + r * std::cos(th), ctr.y + r * std::sin(th)});
  }
  return poly;
}

// ---------------------------------------------------------------------------
// Configuration checks
// ---------------------------------------------------------------------------

namespace {

bool simple_class(EquilibriumClass c) {
  return c == EquilibriumClass::saddle || is_antisaddle(c);
}

std::string count_detail(int a, int cs, int ni, int ci) {
  return "finite antisaddles=" + std::to_string(a) +
         " finite saddles=" + std::to_string(cs) +
         " infinite nodes=" + std::to_string(ni) +
         " infinite saddles=" + std::to_string(ci);
}

CheckResult check_identity(const Census& c,
                           const std::vector<InfiniteSingularity>& inf) {
  int a = 0, cs = 0;
  for (const Equilibrium& e : c.finite) {
    if (!simple_class(e.classification)) {
      return {CheckVerdict::inapplicable,
              std::string("finite point is not simple: ") +
                  to_string(e.classification)};
    }
    if (e.classification == EquilibriumClass::saddle) ++cs;
    else ++a;
  }
  int ni = 0, ci = 0;
  for (const InfiniteSingularity& s : inf) {
    switch (s.type) {
      case InfiniteClass::node:
      case InfiniteClass::triple_node: ++ni; break;
      case InfiniteClass::saddle: ++ci; break;
      case InfiniteClass::saddle_node: break;  // index 0: counts for neither
      default:
        return {CheckVerdict::inapplicable,
                "infinite point with unusable type"};
    }
  }
  const bool ok = (a + ni) == (cs + ci + 1);
  return {ok ? CheckVerdict::pass : CheckVerdict::fail,
          count_detail(a, cs, ni, ci)};
}

struct BranchPoint {
  double order;
  EquilibriumClass cls;
};

CheckResult check_alternation(const ModelParams& p, const Census& c) {
  for (const Equilibrium& e : c.finite) {
    if (!simple_class(e.classification)) {
      return {CheckVerdict::inapplicable, "census has a non-simple point"};
    }
  }

  // Four isocline branches, each a coordinate graph. Segments are split at
  // the isocline's own self-intersections (where its two branches cross).
  struct Branch {
    std::string name;
    std::vector<BranchPoint> pts;
    std::vector<double> cuts;
  };
  std::vector<Branch> branches(4);
  branches[0].name = "x=0";
  branches[0].cuts = {1.0};  // crossing with the prey curve at (0,1)
  branches[1].name = "y=0";
  branches[2].name = "prey-curve";
  branches[2].cuts = {0.0};  // same crossing, seen from the curve side
  branches[3].name = "predator-curve";

  // y=0 and the predator curve cross where delta*A(x) = x.
  const Poly cross{p.delta, p.delta * p.beta - 1.0, p.delta * p.alpha};
  for (double r : real_roots(poly_trim(cross, 1e-14))) {
    branches[1].cuts.push_back(r);
    branches[3].cuts.push_back(r);
  }
  // The predator curve also breaks at denominator poles.
  for (double r : real_roots(poly_trim(Poly{1.0, p.beta, p.alpha}, 1e-14))) {
    branches[3].cuts.push_back(r);
  }

  for (const Equilibrium& e : c.finite) {
    const PhasePoint q = e.location;
    const double sx = 1.0 + std::abs(q.x), sy = 1.0 + std::abs(q.y);
    if (std::abs(q.x) < 1e-8 * sy) branches[0].pts.push_back({q.y, e.classification});
    if (std::abs(q.y) < 1e-8 * sx) branches[1].pts.push_back({q.x, e.classification});
    if (std::abs(q.y - prey_isocline(p, q.x)) < 1e-6 * sy)
      branches[2].pts.push_back({q.x, e.classification});
    const double a = denom(p, q.x);
    if (std::abs((p.delta + p.mu * q.y) * a - q.x) < 1e-6 * sx)
      branches[3].pts.push_back({q.x, e.classification});
  }

  for (Branch& b : branches) {
    std::sort(b.pts.begin(), b.pts.end(),
              [](const BranchPoint& l, const BranchPoint& r) {
                return l.order < r.order;
              });
    for (size_t i = 0; i + 1 < b.pts.size(); ++i) {
      const BranchPoint& l = b.pts[i];
      const BranchPoint& r = b.pts[i + 1];
      bool cut_between = false;
      for (double cut : b.cuts) {
        if (cut > l.order + 1e-12 && cut < r.order - 1e-12) cut_between = true;
      }
      if (cut_between) continue;
      const bool l_saddle = l.cls == EquilibriumClass::saddle;
      const bool r_saddle = r.cls == EquilibriumClass::saddle;
      if (l_saddle == r_saddle) {
        return {CheckVerdict::fail,
                "adjacent same-kind pair on branch " + b.name};
      }
    }
  }
  return {CheckVerdict::pass, "alternation holds on all populated branches"};
}

double orient(PhasePoint a, PhasePoint b, PhasePoint c) {
  return (b - a).cross(c - a);
}

CheckResult check_quadrilateral(const ModelParams& p, const Census& c) {
  if (stage_of(p) != Stage::quadratic) {
    return {CheckVerdict::inapplicable, "not the quadratic stage"};
  }
  if (c.finite.size() != 4) {
    return {CheckVerdict::inapplicable, "needs exactly 4 finite points"};
  }
  for (const Equilibrium& e : c.finite) {
    if (!simple_class(e.classification)) {
      return {CheckVerdict::inapplicable, "census has a non-simple point"};
    }
  }

  // Is one point strictly inside the triangle of the others?
  int inside = -1;
  for (int i = 0; i < 4; ++i) {
    PhasePoint t[3];
    int k = 0;
    for (int j = 0; j < 4; ++j)
      if (j != i) t[k++] = c.finite[j].location;
    const PhasePoint q = c.finite[i].location;
    const double d0 = orient(t[0], t[1], q);
    const double d1 = orient(t[1], t[2], q);
    const double d2 = orient(t[2], t[0], q);
    const double scale = std::abs(orient(t[0], t[1], t[2]));
    if (scale < 1e-12) return {CheckVerdict::inapplicable, "degenerate geometry"};
    if ((d0 > 1e-9 * scale && d1 > 1e-9 * scale && d2 > 1e-9 * scale) ||
        (d0 < -1e-9 * scale && d1 < -1e-9 * scale && d2 < -1e-9 * scale)) {
      inside = i;
      break;
    }
  }

  auto saddle = [&](int i) {
    return c.finite[i].classification == EquilibriumClass::saddle;
  };

  if (inside >= 0) {
    const bool inner_saddle = saddle(inside);
    for (int j = 0; j < 4; ++j) {
      if (j == inside) continue;
      if (saddle(j) == inner_saddle) {
        return {CheckVerdict::fail,
                "triangle case: outer point matches the inner kind"};
      }
    }
    return {CheckVerdict::pass, "triangle configuration"};
  }

  // Convex position: order the points around the centroid.
  PhasePoint ctr{0, 0};
  for (const Equilibrium& e : c.finite) ctr += e.location * 0.25;
  int order[4] = {0, 1, 2, 3};
  std::sort(order, order + 4, [&](int i, int j) {
    const PhasePoint a = c.finite[i].location - ctr;
    const PhasePoint b = c.finite[j].location - ctr;
    return std::atan2(a.y, a.x) < std::atan2(b.y, b.x);
  });
  const bool ok = saddle(order[0]) == saddle(order[2]) &&
                  saddle(order[1]) == saddle(order[3]) &&
                  saddle(order[0]) != saddle(order[1]);
  return {ok ? CheckVerdict::pass : CheckVerdict::fail,
          "quadrilateral configuration"};
}

}  // namespace

ConfigurationReport verify_configuration(const ModelParams& p, const Census& c,
                                         const std::vector<InfiniteSingularity>& inf) {
  ConfigurationReport r;
  r.index_identity = check_identity(c, inf);
  r.alternation = check_alternation(p, c);
  r.quadrilateral = check_quadrilateral(p, c);
  return r;
}

}  // namespace qbl
