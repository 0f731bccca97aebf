#include "qbl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qbl/error.hpp"
#include "qbl/scalar_solve.hpp"

namespace qbl {

const char* to_string(CycleStability s) {
  switch (s) {
    case CycleStability::stable: return "stable";
    case CycleStability::unstable: return "unstable";
    default: return "semi-stable";
  }
}

Section section_from(const ModelParams& p, PhasePoint anchor, double length,
                     bool rotated) {
  Section sec;
  sec.anchor = anchor;
  sec.direction = {1.0, 0.0};
  sec.length = length;
  const ModelField field{p, rotated};
  sec.orientation = +1;
  for (double frac : {0.5, 0.25, 0.75}) {
    const Vec2 f = field(0.0, sec.at(frac * length));
    const double side_rate = sec.normal().dot(f);
    if (std::abs(side_rate) > 1e-12) {
      sec.orientation = side_rate > 0.0 ? +1 : -1;
      break;
    }
  }
  return sec;
}

ReturnHit return_hit(const ModelParams& p, const Section& sec, double s,
                     bool rotated, const ReturnOptions& opt) {
  if (!(s > 0.0) || s > sec.length * (1.0 + 1e-12)) {
    throw std::invalid_argument("section parameter outside (0, length]");
  }
  const ModelField field{p, rotated};
  const Vec2 start = sec.at(s);
  if (field(0.0, start).norm() < opt.integrate.capture_norm) {
    throw NumericError(ErrorCode::no_return, "start point is an equilibrium");
  }

  ReturnHit hit;
  if (opt.record_loop) {
    hit.loop.push_back(start);
    hit.loop_t.push_back(0.0);
  }

  Dopri5<ModelField> st(field, 0.0, start, opt.integrate);
  const double o = sec.orientation;
  double g_prev = o * sec.side(start);  // zero at departure
  const double s_hi = sec.length * std::max(1.0, opt.overshoot_factor);

  while (st.advance(opt.t_limit)) {
    const double ta = st.t_prev(), tb = st.t();
    double t_lo = ta;
    for (int k = 1; k <= 4; ++k) {
      const double tk = ta + (tb - ta) * (0.25 * k);
      const Vec2 xk = k == 4 ? st.y() : st.dense(tk);
      const double g = o * sec.side(xk);
      if (g_prev < 0.0 && g >= 0.0) {
        auto gf = [&](double t) { return o * sec.side(st.dense(t)); };
        const double scale = 1e-10 * (1.0 + xk.norm());
        const double t_root =
            g == 0.0 ? tk
                     : brent_zero(gf, t_lo, tk, g_prev, g, 1e-13 * (1.0 + tb),
                                  scale);
        const Vec2 xr = st.dense(t_root);
        const double s_out = sec.arc(xr);
        if (s_out > 1e-12 * sec.length && s_out <= s_hi) {
          hit.s_out = s_out;
          hit.t_flight = t_root;
          hit.overshoot = s_out > sec.length;
          if (opt.record_loop) {
            hit.loop.push_back(xr);
            hit.loop_t.push_back(t_root);
          }
          return hit;
        }
      }
      g_prev = g;
      t_lo = tk;
    }
    if (opt.record_loop) {
      const double tm = 0.5 * (ta + tb);
      hit.loop.push_back(st.dense(tm));
      hit.loop_t.push_back(tm);
      hit.loop.push_back(st.y());
      hit.loop_t.push_back(tb);
    }
    if (st.y().norm() > opt.integrate.blow_up_radius) {
      throw NumericError(ErrorCode::no_return, "orbit left the working disc");
    }
    if (st.deriv().norm() < opt.integrate.capture_norm) {
      throw NumericError(ErrorCode::no_return, "orbit captured by an equilibrium");
    }
  }
  throw NumericError(ErrorCode::no_return, "no section crossing before the time limit");
}

double return_map(const ModelParams& p, const Section& sec, double s,
                  bool rotated, const ReturnOptions& opt) {
  ReturnOptions strict = opt;
  strict.overshoot_factor = 1.0;  // a return must land on the segment
  return return_hit(p, sec, s, rotated, strict).s_out;
}

ScanOptions sweep_scan_options() {
  ScanOptions o;
  o.grid = 44;
  o.fix_tol_rel = 1e-6;
  o.tangency_rel = 1e-5;
  o.deriv_step_rel = 1e-4;
  o.returns.t_limit = 400.0;
  o.returns.integrate.rtol = 1e-6;
  o.returns.integrate.atol = 1e-8;
  o.returns.integrate.store = false;
  return o;
}

namespace {

struct GridNode {
  double s = 0.0;
  double d = 0.0;
  bool ok = false;
};

CycleStability classify_derivative(double der, double band) {
  if (der < 1.0 - band) return CycleStability::stable;
  if (der > 1.0 + band) return CycleStability::unstable;
  return CycleStability::semi_stable;
}

}  // namespace

std::vector<LimitCycle> find_cycles(const ModelParams& p, const Section& sec,
                                    bool rotated, const ScanOptions& opt) {
  const double L = sec.length;
  ReturnOptions scan_ret = opt.returns;
  scan_ret.overshoot_factor = std::max(4.0, scan_ret.overshoot_factor);
  scan_ret.record_loop = false;

  auto displacement = [&](double s) -> std::optional<double> {
    try {
      return return_hit(p, sec, s, rotated, scan_ret).s_out - s;
    } catch (const NumericError&) {
      return std::nullopt;
    }
  };

  const int n = std::max(opt.grid, 8);
  std::vector<GridNode> nodes(n);
  for (int i = 0; i < n; ++i) {
    const double frac = double(n - 1 - i) / double(n - 1);
    nodes[i].s = L * std::pow(1e-4, frac);
    if (auto d = displacement(nodes[i].s)) {
      nodes[i].d = *d;
      nodes[i].ok = true;
    }
  }

  const double d_tol = opt.fix_tol_rel * L;

  // Safeguarded secant refinement inside a sign-change bracket.
  auto refine = [&](double sa, double da, double sb,
                    double db) -> std::optional<double> {
    for (int it = 0; it < 80; ++it) {
      double sc = sb - db * (sb - sa) / (db - da);
      const double margin = 0.05 * (sb - sa);
      if (!(sc > sa + margin && sc < sb - margin)) sc = 0.5 * (sa + sb);
      const auto dc = displacement(sc);
      if (!dc) return std::nullopt;
      if (std::abs(*dc) <= d_tol) return sc;
      if ((*dc > 0.0) == (da > 0.0)) {
        sa = sc; da = *dc;
      } else {
        sb = sc; db = *dc;
      }
      if (sb - sa < 1e-15 * L) break;
    }
    // A bracket that collapses without the displacement ever reaching
    // tolerance is a jump of the return map (a separatrix slot), not a root.
    return std::nullopt;
  };

  std::vector<double> roots;
  for (int i = 0; i + 1 < n; ++i) {
    if (!nodes[i].ok || !nodes[i + 1].ok) continue;
    const double da = nodes[i].d, db = nodes[i + 1].d;
    if (std::abs(da) <= d_tol) continue;  // handled as its own candidate
    if (da * db < 0.0) {
      if (auto r = refine(nodes[i].s, da, nodes[i + 1].s, db)) roots.push_back(*r);
    }
  }

  // A strongly repelling cycle can sit at the edge of the return map's
  // domain: orbits just outside escape before coming back, so the bracket
  // above never forms. When the displacement trend extrapolates to a zero
  // at the valid/invalid boundary, bisect on definedness instead.
  for (int i = 0; i + 1 < n; ++i) {
    if (nodes[i].ok == nodes[i + 1].ok) continue;
    const int iv = nodes[i].ok ? i : i + 1;       // valid side
    const int ib = nodes[i].ok ? i + 1 : i;       // invalid side
    const int iv2 = nodes[i].ok ? i - 1 : i + 2;  // second valid node inward
    if (iv2 >= 0 && iv2 < n && nodes[iv2].ok &&
        std::abs(nodes[iv].d) > 1.2 * std::abs(nodes[iv2].d)) {
      // |d| grows markedly toward the boundary: a basin edge, not a cycle.
      continue;
    }
    const double s_in = nodes[iv].s, d_in = nodes[iv].d;
    double s_ok = s_in, d_ok = d_in, s_bad = nodes[ib].s;
    bool flipped = false;
    for (int it = 0; it < 60 && std::abs(s_bad - s_ok) > 1e-9 * L; ++it) {
      const double sm = 0.5 * (s_ok + s_bad);
      if (auto dm = displacement(sm)) {
        if ((*dm > 0.0) != (d_in > 0.0) && std::abs(d_in) > d_tol) {
          // The escape pocket hid an ordinary sign change inside the gap.
          const auto r = s_in < sm ? refine(s_in, d_in, sm, *dm)
                                   : refine(sm, *dm, s_in, d_in);
          if (r) roots.push_back(*r);
          flipped = true;
          break;
        }
        s_ok = sm;
        d_ok = *dm;
      } else {
        s_bad = sm;
      }
    }
    if (!flipped && std::abs(d_ok) <= 10.0 * d_tol) roots.push_back(s_ok);
  }
  // Direct hits and near-tangencies without a sign change. A sub-tolerance
  // value only counts when it is a discrete interior minimum of |d|: near a
  // weakly attracting focus |d| ~ s*(multiplier-1) sits below tolerance on a
  // ramp up from s=0, and those nodes are not cycles.
  for (int i = 0; i < n; ++i) {
    if (!nodes[i].ok) continue;
    if (std::abs(nodes[i].d) <= d_tol) {
      const bool interior_min =
          i > 0 && i + 1 < n && nodes[i - 1].ok && nodes[i + 1].ok &&
          std::abs(nodes[i - 1].d) > std::abs(nodes[i].d) &&
          std::abs(nodes[i + 1].d) >= std::abs(nodes[i].d);
      if (interior_min) roots.push_back(nodes[i].s);
      continue;
    }
    if (std::abs(nodes[i].d) >= opt.tangency_rel * L) continue;
    const bool near_bracket =
        (i > 0 && nodes[i - 1].ok && nodes[i - 1].d * nodes[i].d < 0.0) ||
        (i + 1 < n && nodes[i + 1].ok && nodes[i].d * nodes[i + 1].d < 0.0);
    if (near_bracket) continue;
    const double lo = i > 0 ? nodes[i - 1].s : nodes[i].s * 0.5;
    const double hi = i + 1 < n ? nodes[i + 1].s : std::min(L, nodes[i].s * 1.5);
    const double sm = golden_min(
        [&](double s) {
          const auto d = displacement(s);
          return d ? std::abs(*d) : 1e30;
        },
        lo, hi, 1e-11 * L);
    // A minimum pinned to the interval edge is the |d| ~ s ramp of a weakly
    // attracting focus, not a tangency.
    if (sm - lo < 1e-3 * (hi - lo) || hi - sm < 1e-3 * (hi - lo)) continue;
    const auto dm = displacement(sm);
    if (dm && std::abs(*dm) <= d_tol) roots.push_back(sm);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double r : roots) {
    if (unique.empty() || r - unique.back() > 1e-7 * L) unique.push_back(r);
  }

  ReturnOptions loop_ret = scan_ret;
  loop_ret.record_loop = true;

  std::vector<LimitCycle> cycles;
  for (double s_star : unique) {
    LimitCycle c;
    c.section = sec;
    c.rotated = rotated;
    c.s_star = s_star;
    try {
      const ReturnHit hit = return_hit(p, sec, s_star, rotated, loop_ret);
      c.period = hit.t_flight;
      c.loop = hit.loop;
    } catch (const NumericError&) {
      continue;
    }
    const double ds = std::min(opt.deriv_step_rel * L, 0.25 * s_star);
    const auto dp = displacement(s_star + ds);
    const auto dm = displacement(s_star - ds);
    if (dp && dm) {
      c.derivative = (*dp - *dm) / (2.0 * ds) + 1.0;
    } else if (dp || dm) {
      // Domain-edge cycle: fall back to a one-sided second-order difference.
      const auto d0 = displacement(s_star);
      const auto d2 = displacement(dm ? s_star - 2.0 * ds : s_star + 2.0 * ds);
      if (!d0 || !d2) continue;
      c.derivative = dm ? (3.0 * *d0 - 4.0 * *dm + *d2) / (2.0 * ds) + 1.0
                        : (-3.0 * *d0 + 4.0 * *dp - *d2) / (2.0 * ds) + 1.0;
    } else {
      continue;
    }
    c.stability = classify_derivative(c.derivative, opt.stability_band);

    if (opt.check_index) {
      try {
        if (contour_index(p, c.loop, rotated) != 1) continue;
      } catch (const NumericError&) {
        // sparse sampling made the winding ambiguous; keep the cycle
      }
    }
    cycles.push_back(std::move(c));
  }
  std::sort(cycles.begin(), cycles.end(),
            [](const LimitCycle& a, const LimitCycle& b) {
              return a.s_star < b.s_star;
            });
  return cycles;
}

LimitCycle cycle_stability(const ModelParams& p, const LimitCycle& c,
                           const ScanOptions& opt) {
  LimitCycle out = c;
  const Section& sec = c.section;
  const double L = sec.length;
  ReturnOptions ret = opt.returns;
  ret.overshoot_factor = std::max(4.0, ret.overshoot_factor);
  ret.record_loop = false;

  auto displacement = [&](double s) {
    return return_hit(p, sec, s, c.rotated, ret).s_out - s;
  };

  const double ds = std::min(opt.deriv_step_rel * L, 0.2 * c.s_star);
  auto slope = [&](double h) {
    return (displacement(c.s_star + h) - displacement(c.s_star - h)) /
               (2.0 * h) + 1.0;
  };
  const double d1 = slope(ds);
  const double d2 = slope(0.5 * ds);
  out.derivative = (4.0 * d2 - d1) / 3.0;  // Richardson step halving

  ReturnOptions loop_ret = ret;
  loop_ret.record_loop = true;
  const ReturnHit hit = return_hit(p, sec, c.s_star, c.rotated, loop_ret);
  out.period = hit.t_flight;
  out.loop = hit.loop;

  double integral = 0.0;
  double prev_div = 0.0;
  for (size_t i = 0; i < hit.loop.size(); ++i) {
    const Jacobian2 j = eval_jacobian(p, hit.loop[i], c.rotated);
    const double div = j.trace();
    if (i > 0) {
      integral += 0.5 * (prev_div + div) * (hit.loop_t[i] - hit.loop_t[i - 1]);
    }
    prev_div = div;
  }
  out.divergence_multiplier = std::exp(integral);

  const CycleStability by_slope =
      classify_derivative(out.derivative, opt.stability_band);
  const CycleStability by_div =
      classify_derivative(out.divergence_multiplier, opt.stability_band);
  if (by_slope != by_div) {
    throw NumericError(ErrorCode::inconsistent_stability,
                       "return-map slope and divergence integral disagree");
  }
  out.stability = by_slope;
  return out;
}

std::vector<Separatrix> separatrices(const ModelParams& p,
                                     const Equilibrium& saddle, bool rotated,
                                     const SeparatrixOptions& opt) {
  if (saddle.classification != EquilibriumClass::saddle) {
    throw NumericError(ErrorCode::not_a_saddle,
                       "separatrices need a saddle equilibrium");
  }
  const Jacobian2 j = eval_jacobian(p, saddle.location, rotated);
  const auto e = j.eigenvalues();
  const double eps = opt.eps_rel * (1.0 + saddle.location.norm());

  std::vector<Separatrix> out;
  for (double eig : {std::max(e.re1, e.re2), std::min(e.re1, e.re2)}) {
    const Vec2 v = j.eigenvector(eig).unit();
    const bool unstable = eig > 0.0;
    for (int sign : {+1, -1}) {
      Separatrix sep;
      sep.eigenvector = v;
      sep.sign = sign;
      sep.unstable = unstable;
      const Vec2 start = saddle.location + v * (eps * sign);
      const double span = unstable ? opt.t_span : -opt.t_span;
      sep.orbit = flow(ModelField{p, rotated}, start, span, opt.integrate);
      out.push_back(std::move(sep));
    }
  }
  return out;
}

bool encloses(const std::vector<PhasePoint>& loop, PhasePoint q) {
  bool inside = false;
  const size_t n = loop.size();
  if (n < 3) return false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const PhasePoint a = loop[i], b = loop[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double xint = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < xint) inside = !inside;
    }
  }
  return inside;
}

}  // namespace qbl
