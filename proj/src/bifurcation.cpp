#include "qbl/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "qbl/error.hpp"
#include "qbl/scalar_solve.hpp"

namespace qbl {

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::hopf: return "hopf";
    case EventKind::fold_of_cycles: return "fold-of-cycles";
    case EventKind::homoclinic_small_loop: return "homoclinic-small-loop";
    case EventKind::homoclinic_big_loop: return "homoclinic-big-loop";
    case EventKind::eight_loop: return "eight-loop";
    default: return "cycle-from-infinity-candidate";
  }
}

const char* to_string(BranchTermination t) {
  switch (t) {
    case BranchTermination::fold: return "fold";
    case BranchTermination::homoclinic: return "homoclinic";
    case BranchTermination::parameter_bound: return "parameter-bound";
    default: return "lost";
  }
}

double get_param(const ModelParams& p, const std::string& name) {
  if (name == "alpha") return p.alpha;
  if (name == "beta") return p.beta;
  if (name == "gamma") return p.gamma;
  throw std::invalid_argument("unknown scan parameter: " + name);
}

ModelParams with_param(const ModelParams& p, const std::string& name, double v) {
  // The staged sweeps deliberately pass through the response-shape boundary,
  // so construction goes through the unchecked factory.
  if (name == "alpha")
    return ModelParams::unchecked_beta(v, p.beta, p.delta, p.lambda, p.mu, p.gamma);
  if (name == "beta")
    return ModelParams::unchecked_beta(p.alpha, v, p.delta, p.lambda, p.mu, p.gamma);
  if (name == "gamma") return p.with_gamma(v);
  throw std::invalid_argument("unknown scan parameter: " + name);
}

namespace {

// Newton steps on the base field; used to track an equilibrium while alpha
// or beta moves (gamma never moves equilibria).
PhasePoint track_equilibrium(const ModelParams& p, PhasePoint seed) {
  PhasePoint pt = seed;
  for (int it = 0; it < 24; ++it) {
    const FieldValue f = eval_field(p, pt);
    const Jacobian2 j = eval_jacobian(p, pt, false);
    const double det = j.det();
    const double jn = std::abs(j.px) + std::abs(j.py) + std::abs(j.qx) +
                      std::abs(j.qy);
    if (std::abs(det) < 1e-14 * jn * jn + 1e-300) break;
    const double dx = (-f.dx * j.qy + f.dy * j.py) / det;
    const double dy = (-j.px * f.dy + j.qx * f.dx) / det;
    pt.x += dx;
    pt.y += dy;
    if (std::hypot(dx, dy) < 1e-15 * (1.0 + pt.norm())) break;
  }
  return pt;
}

}  // namespace

std::vector<BifurcationEvent> hopf_detect(const ModelParams& p,
                                          const Equilibrium& eq,
                                          const std::string& parameter,
                                          double lo, double hi,
                                          const HopfOptions& opt) {
  if (!(hi > lo)) throw std::invalid_argument("empty scan range");
  const bool moves = parameter != "gamma";

  struct Probe {
    double trace, det;
    PhasePoint loc;
  };
  auto probe = [&](double v, PhasePoint seed) -> Probe {
    const ModelParams pv = with_param(p, parameter, v);
    const PhasePoint loc = moves ? track_equilibrium(pv, seed) : seed;
    const Jacobian2 j = eval_jacobian(pv, loc, true);
    return {j.trace(), j.det(), loc};
  };

  std::vector<BifurcationEvent> events;
  const int n = std::max(opt.samples, 8);
  PhasePoint loc = eq.location;
  Probe prev = probe(lo, loc);
  for (int i = 1; i <= n; ++i) {
    const double v = lo + (hi - lo) * i / n;
    const Probe cur = probe(v, prev.loc);
    if (prev.trace == 0.0 || prev.trace * cur.trace < 0.0) {
      double va = lo + (hi - lo) * (i - 1) / n, vb = v;
      Probe pa = prev;
      PhasePoint seed = prev.loc;
      while (vb - va > opt.bisect_tol) {
        const double vm = 0.5 * (va + vb);
        const Probe pm = probe(vm, seed);
        seed = pm.loc;
        if (pa.trace == 0.0 || pa.trace * pm.trace <= 0.0) {
          vb = vm;
        } else {
          va = vm;
          pa = pm;
        }
      }
      const double v_star = 0.5 * (va + vb);
      const Probe ps = probe(v_star, seed);
      if (ps.det > 0.0) {
        BifurcationEvent ev;
        ev.kind = EventKind::hopf;
        ev.parameter = parameter;
        ev.value = v_star;
        ev.subject = ps.loc;
        ev.diagnostics["trace"] = ps.trace;
        ev.diagnostics["det"] = ps.det;
        if (parameter == "gamma") {
          ev.diagnostics["closed_form"] = hopf_gamma_closed_form(p, ps.loc);
        }
        events.push_back(std::move(ev));
      }
    }
    prev = cur;
  }
  std::sort(events.begin(), events.end(),
            [](const BifurcationEvent& a, const BifurcationEvent& b) {
              return a.value < b.value;
            });
  return events;
}

namespace {

struct Displacement {
  const ModelParams& p;
  const Section& sec;
  bool rotated;
  ReturnOptions ret;

  std::optional<double> operator()(double s) const {
    if (!(s > 0.0) || s > sec.length) return std::nullopt;
    try {
      return return_hit(p, sec, s, rotated, ret).s_out - s;
    } catch (const NumericError&) {
      return std::nullopt;
    }
  }
};

// Safeguarded secant zero of a displacement map inside a sign bracket.
std::optional<double> refine_zero(const Displacement& d, double sa, double da,
                                  double sb, double db, double tol) {
  for (int it = 0; it < 80; ++it) {
    double sc = sb - db * (sb - sa) / (db - da);
    const double margin = 0.05 * (sb - sa);
    if (!(sc > sa + margin && sc < sb - margin)) sc = 0.5 * (sa + sb);
    const auto dc = d(sc);
    if (!dc) return std::nullopt;
    if (std::abs(*dc) <= tol) return sc;
    if ((*dc > 0.0) == (da > 0.0)) {
      sa = sc;
      da = *dc;
    } else {
      sb = sc;
      db = *dc;
    }
    if (sb - sa < 1e-15 * sb) return 0.5 * (sa + sb);
  }
  return std::nullopt;
}

// Re-locate the cycle fixed point near a predicted s value; widens the
// bracket a few times before giving up. An endpoint outside the return
// map's domain (the orbit escapes before coming back) is pulled to the
// domain edge first: a strongly repelling cycle keeps its root next to
// that edge.
std::optional<double> relocate(const Displacement& d, double s_pred,
                               double window, double length, double tol) {
  auto edge = [&](double s_ok, std::optional<double> d_ok, double s_bad) {
    for (int it = 0; it < 60 && std::abs(s_bad - s_ok) > 1e-10 * length; ++it) {
      const double sm = 0.5 * (s_ok + s_bad);
      if (const auto dm = d(sm)) {
        s_ok = sm;
        d_ok = dm;
      } else {
        s_bad = sm;
      }
    }
    return std::pair{s_ok, d_ok};
  };
  double w = window;
  for (int attempt = 0; attempt < 4; ++attempt) {
    double sa = std::max(1e-6 * length, s_pred - w);
    double sb = std::min(length, s_pred + w);
    auto da = d(sa), db = d(sb);
    if (!da || !db) {
      double anchor;
      std::optional<double> d_anchor;
      if (const auto dc = d(s_pred); dc) {
        anchor = s_pred;
        d_anchor = dc;
      } else if (da) {
        anchor = sa;
        d_anchor = da;
      } else if (db) {
        anchor = sb;
        d_anchor = db;
      } else {
        w *= 2.0;
        continue;
      }
      if (!da) std::tie(sa, da) = edge(anchor, d_anchor, sa);
      if (!db) std::tie(sb, db) = edge(anchor, d_anchor, sb);
    }
    // Bracket-only: accepting a same-sign near-zero at the domain edge here
    // would let the branch ride ghost roots past a connection.
    if (da && db && (*da) * (*db) < 0.0)
      return refine_zero(d, sa, *da, sb, *db, tol);
    w *= 2.0;
  }
  return std::nullopt;
}

double min_saddle_distance(const std::vector<PhasePoint>& loop,
                           const std::vector<Equilibrium>& eqs) {
  double best = 1e300;
  for (const Equilibrium& e : eqs) {
    if (e.classification != EquilibriumClass::saddle) continue;
    for (const PhasePoint& q : loop) {
      best = std::min(best, (q - e.location).norm());
    }
  }
  return best;
}

LimitCycle make_cycle(const ModelParams& p, const Section& sec, bool rotated,
                      double s_star, const Displacement& d,
                      const ScanOptions& scan) {
  LimitCycle c;
  c.section = sec;
  c.rotated = rotated;
  c.s_star = s_star;
  ReturnOptions loop_ret = d.ret;
  loop_ret.record_loop = true;
  const ReturnHit hit = return_hit(p, sec, s_star, rotated, loop_ret);
  c.period = hit.t_flight;
  c.loop = hit.loop;
  const double ds = std::min(scan.deriv_step_rel * sec.length, 0.25 * s_star);
  const auto dp = d(s_star + ds), dm = d(s_star - ds);
  if (dp && dm) {
    c.derivative = (*dp - *dm) / (2.0 * ds) + 1.0;
  } else if (dp || dm) {
    // One side of the return map's domain ended; use a one-sided difference.
    const auto d0 = d(s_star);
    const auto d2 = d(dm ? s_star - 2.0 * ds : s_star + 2.0 * ds);
    if (d0 && d2) {
      c.derivative = dm ? (3.0 * *d0 - 4.0 * *dm + *d2) / (2.0 * ds) + 1.0
                        : (-3.0 * *d0 + 4.0 * *dp - *d2) / (2.0 * ds) + 1.0;
    } else {
      c.derivative = 1.0;
    }
  } else {
    c.derivative = 1.0;
  }
  if (c.derivative < 1.0 - scan.stability_band) c.stability = CycleStability::stable;
  else if (c.derivative > 1.0 + scan.stability_band) c.stability = CycleStability::unstable;
  else c.stability = CycleStability::semi_stable;
  return c;
}

}  // namespace

CycleBranch continue_cycle(const ModelParams& p, const LimitCycle& c,
                           const std::string& parameter,
                           const ContinuationPolicy& policy) {
  CycleBranch branch;
  branch.parameter = parameter;

  const double v0 = get_param(p, parameter);
  const double range = std::abs(policy.to - v0);
  if (range == 0.0) throw std::invalid_argument("degenerate continuation range");
  const double dir = policy.to > v0 ? 1.0 : -1.0;
  const double min_step = policy.min_step_rel * range;
  const double max_step = policy.max_step_rel * range;
  double step = policy.initial_step > 0.0 ? policy.initial_step : 1e-3 * range;
  step = std::clamp(step, min_step, max_step);

  const Section& sec = c.section;
  const double L = sec.length;
  const double d_tol = policy.scan.fix_tol_rel * L;

  branch.samples.push_back({v0, c});
  double v = v0;
  double s_prev = c.s_star;
  double window = std::max(2e-3 * L, 1e-2 * s_prev);
  int successes = 0;
  bool fold_armed = false;

  while (int(branch.samples.size()) < policy.max_samples) {
    double v_next = v + dir * step;
    bool at_bound = false;
    if ((policy.to - v_next) * dir <= 0.0) {
      v_next = policy.to;
      at_bound = true;
    }
    const ModelParams pv = with_param(p, parameter, v_next);
    const Displacement d{pv, sec, c.rotated, policy.scan.returns};

    const auto s_new = relocate(d, s_prev, window, L, d_tol);
    const bool local = s_new && std::abs(*s_new - s_prev) < 0.1 * L;
    if (local) {
      LimitCycle cyc;
      bool built = true;
      try {
        cyc = make_cycle(pv, sec, c.rotated, *s_new, d, policy.scan);
      } catch (const NumericError&) {
        built = false;
      }
      if (built) {
        window = std::clamp(4.0 * std::abs(*s_new - s_prev), 1e-4 * L, 0.1 * L);
        s_prev = *s_new;
        v = v_next;
        branch.samples.push_back({v, cyc});
        if (std::abs(cyc.derivative - 1.0) > 2.0 * policy.scan.stability_band) {
          fold_armed = true;
        } else if (fold_armed) {
          branch.termination = BranchTermination::fold;
          branch.diagnostics["derivative"] = cyc.derivative;
          return branch;
        }
        if (cyc.period > policy.period_cap) {
          const Census cen = full_census(pv, c.rotated);
          const double dist = min_saddle_distance(cyc.loop, cen.finite);
          branch.diagnostics["period"] = cyc.period;
          branch.diagnostics["saddle_distance"] = dist;
          branch.termination = dist < policy.loop_saddle_dist
                                   ? BranchTermination::homoclinic
                                   : BranchTermination::lost;
          return branch;
        }
        if (at_bound) {
          branch.termination = BranchTermination::parameter_bound;
          return branch;
        }
        if (++successes >= 3) {
          successes = 0;
          step = std::min(step * 1.5, max_step);
        }
        continue;
      }
    }
    successes = 0;
    step *= 0.5;
    if (step < min_step) {
      // The step collapsed: decide between a connection and a plain loss by
      // how close the last cycle passes to a saddle. The period alone is a
      // poor witness, growing only logarithmically toward a connection.
      const ModelParams pl = with_param(p, parameter, v);
      const Census cen = full_census(pl, c.rotated);
      const double dist =
          min_saddle_distance(branch.samples.back().cycle.loop, cen.finite);
      branch.diagnostics["last_step"] = step;
      branch.diagnostics["saddle_distance"] = dist;
      branch.diagnostics["period"] = branch.samples.back().cycle.period;
      branch.termination = dist < policy.loop_saddle_dist
                               ? BranchTermination::homoclinic
                               : BranchTermination::lost;
      return branch;
    }
  }
  branch.termination = BranchTermination::lost;
  branch.diagnostics["sample_cap"] = double(policy.max_samples);
  return branch;
}

namespace {

// Does the displacement map change sign anywhere on the window?
// A merged (post-fold) pair leaves the map one-signed.
bool pair_exists(const Displacement& d, double s_lo, double s_hi, int grid) {
  bool seen = false;
  double prev = 0.0;
  for (int i = 0; i <= grid; ++i) {
    const double s = s_lo + (s_hi - s_lo) * i / grid;
    const auto ds = d(s);
    if (!ds) continue;
    if (seen && prev * (*ds) < 0.0) return true;
    prev = *ds;
    seen = true;
  }
  return false;
}

}  // namespace

BifurcationEvent detect_fold(const ModelParams& p, const CycleBranch& b1,
                             const CycleBranch& b2, const FoldOptions& opt) {
  if (b1.parameter != b2.parameter || b1.samples.empty() || b2.samples.empty()) {
    throw NumericError(ErrorCode::no_merge, "branches are not comparable");
  }
  const std::string& name = b1.parameter;
  const LimitCycle& c1 = b1.samples.back().cycle;
  const LimitCycle& c2 = b2.samples.back().cycle;
  if (c1.stability == c2.stability) {
    throw NumericError(ErrorCode::no_merge,
                       "branches do not have opposite stability");
  }
  const Section sec = c1.section;
  const double L = sec.length;

  double s_min = 1e300, s_max = 0.0;
  for (const CycleBranch* b : {&b1, &b2}) {
    const size_t n = b->samples.size();
    for (size_t i = n - std::min<size_t>(n, 5); i < n; ++i) {
      s_min = std::min(s_min, b->samples[i].cycle.s_star);
      s_max = std::max(s_max, b->samples[i].cycle.s_star);
    }
  }
  const double s_lo = std::max(1e-5 * L, 0.6 * s_min);
  const double s_hi = std::min(L, 1.5 * s_max);

  auto exists_at = [&](double v) {
    const ModelParams pv = with_param(p, name, v);
    const Displacement d{pv, sec, c1.rotated, opt.scan.returns};
    return pair_exists(d, s_lo, s_hi, 40);
  };

  const double e1 = b1.samples.back().value;
  const double e2 = b2.samples.back().value;
  const double v_dir = b1.samples.size() > 1 &&
                               b1.samples.back().value < b1.samples.front().value
                           ? -1.0
                           : 1.0;
  double v_in = v_dir > 0 ? std::min(e1, e2) : std::max(e1, e2);

  // March outward past the branch ends until the pair disappears.
  if (!exists_at(v_in)) {
    // fall back to the farthest-in sample pair
    v_in = v_dir > 0 ? std::min(b1.samples.front().value, b2.samples.front().value)
                     : std::max(b1.samples.front().value, b2.samples.front().value);
    if (!exists_at(v_in)) {
      throw NumericError(ErrorCode::no_merge,
                         "cycle pair not found at the branch ends");
    }
  }
  double probe_step = std::max(std::abs(e1 - e2), 1e-6 * (1.0 + std::abs(v_in)));
  double v_out = v_in;
  bool gone = false;
  for (int it = 0; it < 48; ++it) {
    v_out += v_dir * probe_step;
    if (!exists_at(v_out)) {
      gone = true;
      break;
    }
    v_in = v_out;
    probe_step *= 1.6;
  }
  if (!gone) {
    throw NumericError(ErrorCode::no_merge, "no merge in range");
  }

  while (std::abs(v_out - v_in) > opt.param_tol) {
    const double vm = 0.5 * (v_in + v_out);
    if (exists_at(vm)) v_in = vm; else v_out = vm;
  }
  const double v_fold = 0.5 * (v_in + v_out);

  // Semi-stable representative on the still-existing side.
  const ModelParams pf = with_param(p, name, v_in);
  const Displacement d{pf, sec, c1.rotated, opt.scan.returns};
  const double s_m = golden_min(
      [&](double s) {
        const auto ds = d(s);
        return ds ? std::abs(*ds) : 1e30;
      },
      s_lo, s_hi, 1e-10 * L);
  LimitCycle semi = make_cycle(pf, sec, c1.rotated, s_m, d, opt.scan);

  BifurcationEvent ev;
  ev.kind = EventKind::fold_of_cycles;
  ev.parameter = name;
  ev.value = v_fold;
  ev.subject = sec.at(s_m);
  ev.diagnostics["derivative"] = semi.derivative;
  ev.diagnostics["s_star"] = s_m;
  ev.diagnostics["period"] = semi.period;
  const auto dres = d(s_m);
  ev.diagnostics["residual"] = dres ? std::abs(*dres) : -1.0;
  return ev;
}

// ---------------------------------------------------------------------------
// Homoclinic loops
// ---------------------------------------------------------------------------

namespace {

struct SplitGeometry {
  PhasePoint saddle;
  Vec2 es, eu;       // stable / unstable unit eigenvectors
  PhasePoint t0;     // transversal anchor on the stable axis
  Vec2 tangent;      // transversal direction
  double width;
};

// First crossing of the transversal line in the required g-direction.
// g = sign * es . (x - t0); want_rising selects -..0..+ versus +..0..-.
std::optional<PhasePoint> line_crossing(const ModelParams& p, bool rotated,
                                        Vec2 start, double t_span,
                                        const SplitGeometry& geo, double g_sign,
                                        bool want_rising,
                                        const IntegrateOptions& iopt) {
  const ModelField field{p, rotated};
  auto gval = [&](Vec2 x) { return g_sign * geo.es.dot(x - geo.t0); };
  Dopri5<ModelField> st(field, 0.0, start, iopt);
  double g_prev = gval(start);
  while (true) {
    try {
      if (!st.advance(t_span)) return std::nullopt;
    } catch (const NumericError&) {
      return std::nullopt;
    }
    const double ta = st.t_prev(), tb = st.t();
    double t_lo = ta;
    for (int k = 1; k <= 4; ++k) {
      const double tk = ta + (tb - ta) * 0.25 * k;
      const Vec2 xk = k == 4 ? st.y() : st.dense(tk);
      const double g = gval(xk);
      const bool crossed = want_rising ? (g_prev < 0.0 && g >= 0.0)
                                       : (g_prev > 0.0 && g <= 0.0);
      if (crossed) {
        auto gf = [&](double t) { return gval(st.dense(t)); };
        const double t_root =
            g == 0.0 ? tk
                     : brent_zero(gf, t_lo, tk, g_prev, g,
                                  1e-13 * (1.0 + std::abs(tb)),
                                  1e-11 * (1.0 + xk.norm()));
        const Vec2 xr = st.dense(t_root);
        if (std::abs(geo.tangent.dot(xr - geo.t0)) <= geo.width) return xr;
      }
      g_prev = g;
      t_lo = tk;
    }
    if (st.y().norm() > iopt.blow_up_radius) return std::nullopt;
    if (st.deriv().norm() < iopt.capture_norm) return std::nullopt;
  }
}

}  // namespace

std::vector<BifurcationEvent> homoclinic_scan(const ModelParams& p,
                                              const Equilibrium& saddle,
                                              const std::string& parameter,
                                              double lo, double hi,
                                              const HomoclinicOptions& opt) {
  if (!(hi > lo)) throw std::invalid_argument("empty scan range");
  if (saddle.classification != EquilibriumClass::saddle) {
    throw NumericError(ErrorCode::not_a_saddle, "homoclinic scan needs a saddle");
  }
  const bool moves = parameter != "gamma";
  const double range = hi - lo;
  const double tol = opt.param_tol * std::max(1.0, range);

  Vec2 es_ref{0, 0}, eu_ref{0, 0};
  auto geometry = [&](const ModelParams& pv,
                      PhasePoint& loc) -> std::optional<SplitGeometry> {
    loc = moves ? track_equilibrium(pv, loc) : loc;
    const Jacobian2 j = eval_jacobian(pv, loc, true);
    const auto e = j.eigenvalues();
    if (e.complex_pair() || e.re1 * e.re2 >= 0.0) return std::nullopt;
    const double l_u = std::max(e.re1, e.re2), l_s = std::min(e.re1, e.re2);
    Vec2 eu = j.eigenvector(l_u).unit();
    Vec2 es = j.eigenvector(l_s).unit();
    if (es_ref.norm() > 0.5 && es.dot(es_ref) < 0.0) es = es * -1.0;
    if (eu_ref.norm() > 0.5 && eu.dot(eu_ref) < 0.0) eu = eu * -1.0;
    es_ref = es;
    eu_ref = eu;
    SplitGeometry g;
    g.saddle = loc;
    g.es = es;
    g.eu = eu;
    g.tangent = es.perp();
    g.width = 0.0;  // per-pairing below
    return g;
  };

  struct PairingState {
    int su, ss;
    std::vector<std::pair<double, double>> samples;  // (v, split)
  };
  std::vector<PairingState> pairings = {
      {+1, +1, {}}, {+1, -1, {}}, {-1, +1, {}}, {-1, -1, {}}};

  auto split_at = [&](double v, int su, int ss,
                      PhasePoint& loc) -> std::optional<double> {
    try {
      const ModelParams pv = with_param(p, parameter, v);
      auto geo = geometry(pv, loc);
      if (!geo) return std::nullopt;
      const double dist = opt.transversal_dist_rel * (1.0 + geo->saddle.norm());
      geo->t0 = geo->saddle + geo->es * (ss * dist);
      geo->width = 30.0 * dist;
      const double eps = opt.shoot.eps_rel * (1.0 + geo->saddle.norm());

      // Stable-branch offset: short backward trace from just inside.
      const Vec2 qs = geo->saddle + geo->es * (ss * eps);
      const auto xs = line_crossing(pv, true, qs, -opt.shoot.t_span, *geo,
                                    double(ss), true, opt.shoot.integrate);
      if (!xs) return std::nullopt;
      const double a_s = geo->tangent.dot(*xs - geo->t0);

      // Unstable-branch offset: forward shot around the loop, crossing the
      // transversal while moving back toward the saddle.
      const Vec2 qu = geo->saddle + geo->eu * (su * eps);
      const auto xu = line_crossing(pv, true, qu, opt.shoot.t_span, *geo,
                                    double(ss), false, opt.shoot.integrate);
      if (!xu) return std::nullopt;
      return geo->tangent.dot(*xu - geo->t0) - a_s;
    } catch (const NumericError&) {
      // A shot that drives the stepper into the ground (step underflow on a
      // grazing pass) is an undefined sample, not a scan failure.
      return std::nullopt;
    }
  };

  std::vector<BifurcationEvent> events;

  // Build the loop at a connection parameter and classify what it wraps.
  auto emit_event = [&](double v_h, const PairingState& pair, PhasePoint loc,
                        double residual) {
    const ModelParams pv = with_param(p, parameter, v_h);
    PhasePoint loc_h = loc;
    auto geo = geometry(pv, loc_h);
    if (!geo) return;
    const double dist = opt.transversal_dist_rel * (1.0 + geo->saddle.norm());
    const double eps = opt.shoot.eps_rel * (1.0 + geo->saddle.norm());
    geo->t0 = geo->saddle + geo->es * (pair.ss * dist);
    geo->width = 30.0 * dist;
    IntegrateOptions io = opt.shoot.integrate;
    io.store = true;
    const Vec2 qu = geo->saddle + geo->eu * (pair.su * eps);
    // Re-run the shot with stored states to sample the loop.
    Orbit orb;
    try {
      orb = flow(ModelField{pv, true}, qu, opt.shoot.t_span, io);
    } catch (const NumericError&) {
      return;
    }
    std::vector<PhasePoint> loop;
    // Cut the stored shot at the first close re-approach after the orbit has
    // actually left the saddle's neighbourhood (the launch itself lingers
    // there for many small steps).
    bool left = false;
    for (const OrbitState& st : orb.states) {
      loop.push_back(st.x);
      const double r = (st.x - geo->saddle).norm();
      if (r > 10.0 * dist) left = true;
      const double g = pair.ss * geo->es.dot(st.x - geo->t0);
      if (left && g < 0.0 &&
          std::abs(geo->tangent.dot(st.x - geo->t0)) < geo->width &&
          r < 3.0 * dist) {
        break;
      }
    }
    loop.push_back(geo->saddle);

    const Census cen = full_census(pv, true);
    std::vector<PhasePoint> inside;
    for (const Equilibrium& e : cen.finite) {
      if (!is_antisaddle(e.classification)) continue;
      if (e.location.x < 1e-9 || e.location.y < 1e-9) continue;
      if (encloses(loop, e.location)) inside.push_back(e.location);
    }
    BifurcationEvent ev;
    ev.parameter = parameter;
    ev.value = v_h;
    ev.subject = geo->saddle;
    ev.diagnostics["unstable_sign"] = pair.su;
    ev.diagnostics["stable_sign"] = pair.ss;
    ev.diagnostics["split_residual"] = residual;
    if (inside.size() >= 2) {
      ev.kind = EventKind::homoclinic_big_loop;
    } else {
      ev.kind = EventKind::homoclinic_small_loop;
      if (!inside.empty()) {
        ev.diagnostics["encloses_x"] = inside[0].x;
        ev.diagnostics["encloses_y"] = inside[0].y;
      }
    }
    events.push_back(std::move(ev));
  };

  for (PairingState& pair : pairings) {
    PhasePoint loc = saddle.location;
    const int n = std::max(opt.samples, 8);
    const double w_edge_gate =
        0.25 * opt.transversal_dist_rel * (1.0 + loc.norm());
    const double w_tol = 1e-3 * opt.transversal_dist_rel * (1.0 + loc.norm());
    std::optional<double> prev;
    bool prev_valid = false;
    double v_prev = lo;
    for (int i = 0; i <= n; ++i) {
      const double v = lo + range * i / n;
      const auto w = split_at(v, pair.su, pair.ss, loc);
      if (w) pair.samples.push_back({v, *w});

      if (w && prev_valid && (*prev) * (*w) < 0.0) {
        // Classic bracketing: the split changes sign between valid samples.
        double va = v_prev, vb = v, wa = *prev;
        bool broke = false;
        while (vb - va > tol) {
          const double vm = 0.5 * (va + vb);
          const auto wm = split_at(vm, pair.su, pair.ss, loc);
          if (!wm) { broke = true; break; }
          if (wa * (*wm) <= 0.0) vb = vm;
          else { va = vm; wa = *wm; }
        }
        if (!broke || std::abs(wa) <= w_tol) {
          emit_event(broke ? va : 0.5 * (va + vb), pair, loc, std::abs(wa));
        }
      } else if (prev_valid != bool(w) && i > 0) {
        // The split branch ends where the far-side shot stops re-approaching
        // the saddle: the connection is the edge of the definable branch.
        // Bisect on definedness, then require the split to vanish there.
        double v_ok = w ? v : v_prev;
        double v_bad = w ? v_prev : v;
        double w_ok = w ? *w : *prev;
        // Worth bisecting only when the branch tails off toward the edge:
        // |W| small outright, or shrinking over the last two valid samples
        // (the absolute gate alone would miss a connection on a coarse grid).
        const size_t m = pair.samples.size();
        const bool shrinking =
            !w && m >= 2 &&
            std::abs(pair.samples[m - 1].second) <
                std::abs(pair.samples[m - 2].second);
        if (std::abs(w_ok) <= w_edge_gate || shrinking) {
          // Bisect on "defined and same sign as the branch". Past the
          // connection the branch either dies outright or survives briefly
          // with the opposite sign and a steep slope (the saddle's
          // contraction/expansion ratio is below one), so both boundaries
          // sit at the connection itself.
          const double sgn = w_ok > 0.0 ? 1.0 : -1.0;
          bool flipped = false;
          while (std::abs(v_bad - v_ok) > tol) {
            const double vm = 0.5 * (v_ok + v_bad);
            const auto wm = split_at(vm, pair.su, pair.ss, loc);
            if (wm && sgn * (*wm) > 0.0) {
              v_ok = vm;
              w_ok = *wm;
            } else {
              v_bad = vm;
              if (wm) flipped = true;
            }
          }
          if (flipped || std::abs(w_ok) <= w_tol)
            emit_event(v_ok, pair, loc, std::abs(w_ok));
        }
      }

      prev_valid = bool(w);
      if (w) {
        prev = w;
        v_prev = v;
      } else {
        v_prev = v;
      }
    }
  }

  // Two small loops around different foci at practically the same parameter
  // make an eight figure.
  const size_t n_ev = events.size();
  for (size_t i = 0; i < n_ev; ++i) {
    for (size_t j = i + 1; j < n_ev; ++j) {
      if (events[i].kind != EventKind::homoclinic_small_loop) continue;
      if (events[j].kind != EventKind::homoclinic_small_loop) continue;
      const auto xi = events[i].diagnostics.find("encloses_x");
      const auto xj = events[j].diagnostics.find("encloses_x");
      if (xi == events[i].diagnostics.end() || xj == events[j].diagnostics.end())
        continue;
      if (std::abs(xi->second - xj->second) < 1e-6) continue;  // same focus
      if (std::abs(events[i].value - events[j].value) <= 1e-6) {
        BifurcationEvent ev;
        ev.kind = EventKind::eight_loop;
        ev.parameter = parameter;
        ev.value = 0.5 * (events[i].value + events[j].value);
        ev.subject = events[i].subject;
        ev.diagnostics["gap"] = std::abs(events[i].value - events[j].value);
        events.push_back(std::move(ev));
      }
    }
  }
  std::sort(events.begin(), events.end(),
            [](const BifurcationEvent& a, const BifurcationEvent& b) {
              return a.value < b.value;
            });
  return events;
}

// ---------------------------------------------------------------------------
// Cycle counting and the staged scenario
// ---------------------------------------------------------------------------

CycleCount count_cycles(const ModelParams& p, bool rotated,
                        const ScanOptions& scan, double outer_radius) {
  CycleCount out;
  Census cen;
  try {
    cen = full_census(p, rotated);
  } catch (const NumericError&) {
    return out;
  }

  std::vector<const Equilibrium*> anchors;
  for (const Equilibrium& e : cen.finite) {
    if (is_antisaddle(e.classification) && e.location.x > 1e-9 &&
        e.location.y > 1e-9) {
      anchors.push_back(&e);
    }
  }
  if (anchors.empty()) return out;

  double spread = 1.0;
  for (const Equilibrium& e : cen.finite) {
    spread = std::max(spread, e.location.norm());
  }

  struct Tagged {
    LimitCycle cycle;
    uint32_t signature = 0;
    const Equilibrium* source = nullptr;
  };
  std::vector<Tagged> unique;

  bool rim_checked = false;
  for (const Equilibrium* a : anchors) {
    const double L = outer_radius > 0.0 ? outer_radius : 3.0 * (1.0 + spread);
    const Section sec = section_from(p, a->location, L, rotated);
    std::vector<LimitCycle> found;
    try {
      found = find_cycles(p, sec, rotated, scan);
    } catch (const NumericError&) {
      continue;
    }
    for (LimitCycle& c : found) {
      uint32_t sig = 0;
      for (size_t k = 0; k < cen.finite.size() && k < 32; ++k) {
        if (encloses(c.loop, cen.finite[k].location)) sig |= 1u << k;
      }
      // Two hits on the same section are distinct cycles by construction;
      // the merge is only for the same cycle re-found from another anchor.
      bool dup = false;
      for (const Tagged& t : unique) {
        if (t.source != a && t.signature == sig &&
            std::abs(t.cycle.period - c.period) <
                1e-2 * std::max(t.cycle.period, c.period)) {
          dup = true;
          break;
        }
      }
      if (!dup) unique.push_back({std::move(c), sig, a});
    }
    if (!rim_checked) {
      rim_checked = true;
      ReturnOptions rim = scan.returns;
      rim.overshoot_factor = 4.0;
      try {
        const ReturnHit hit = return_hit(p, sec, L, rotated, rim);
        if (hit.s_out > L) out.outward_at_rim = true;
      } catch (const NumericError&) {
      }
    }
  }

  out.total = int(unique.size());
  for (size_t k = 0; k < cen.finite.size() && k < 32; ++k) {
    if (!is_antisaddle(cen.finite[k].classification)) continue;
    int around = 0;
    for (const Tagged& t : unique) {
      if (t.signature & (1u << k)) ++around;
    }
    out.max_concentric = std::max(out.max_concentric, around);
  }
  for (Tagged& t : unique) out.cycles.push_back(std::move(t.cycle));
  return out;
}

namespace {

void absorb_sample(StageLog& log, ScenarioReport& rep, const ModelParams& p,
                   const CycleCount& cc) {
  ++log.samples;
  ++rep.total_samples;
  log.max_total = std::max(log.max_total, cc.total);
  log.max_concentric = std::max(log.max_concentric, cc.max_concentric);
  rep.max_simultaneous = std::max(rep.max_simultaneous, cc.total);
  rep.max_concentric = std::max(rep.max_concentric, cc.max_concentric);
  if (cc.total > 2 || cc.max_concentric > 2) {
    rep.breach = true;
    rep.breach_params = p;
    rep.breach_note = cc.total > 2 ? "more than two simultaneous cycles"
                                   : "more than two concentric cycles";
  }
}

void sweep_stage(const ScenarioStageConfig& cfg, const ScanOptions& scan,
                 const char* name, bool rotated, ScenarioReport& rep) {
  if (cfg.samples <= 0) return;
  StageLog log;
  log.name = name;
  bool rim_prev = false;
  int prev_total = -1;
  double prev_v = cfg.from;
  for (int i = 0; i < cfg.samples && !rep.breach; ++i) {
    const double v =
        cfg.from + (cfg.to - cfg.from) * i / std::max(1, cfg.samples - 1);
    const ModelParams pv = with_param(cfg.base, cfg.parameter, v);
    const CycleCount cc = count_cycles(pv, rotated, scan, cfg.outer_radius);
    absorb_sample(log, rep, pv, cc);

    if (cc.outward_at_rim && !rim_prev) {
      BifurcationEvent ev;
      ev.kind = EventKind::cycle_from_infinity_candidate;
      ev.parameter = cfg.parameter;
      ev.value = v;
      ev.diagnostics["outer_radius"] = cfg.outer_radius;
      log.events.push_back(std::move(ev));
    }
    rim_prev = cc.outward_at_rim;

    if (prev_total == 2 && cc.total == 0) {
      BifurcationEvent ev;  // a pair vanished between grid neighbors
      ev.kind = EventKind::fold_of_cycles;
      ev.parameter = cfg.parameter;
      ev.value = 0.5 * (prev_v + v);
      ev.diagnostics["grid_resolution"] = std::abs(v - prev_v);
      log.events.push_back(std::move(ev));
    }
    prev_total = cc.total;
    prev_v = v;
  }
  rep.stages.push_back(std::move(log));
}

}  // namespace

ScenarioReport run_scenario(const ScenarioConfig& config) {
  ScenarioReport rep;

  // Stage (i): the two-invariant-line base system over a parameter box.
  if (config.quad_grid > 0) {
    StageLog log;
    log.name = "quadratic-grid";
    const int g = config.quad_grid;
    for (int a = 0; a < g && !rep.breach; ++a) {
      for (int b = 0; b < g && !rep.breach; ++b) {
        for (int c = 0; c < g && !rep.breach; ++c) {
          const double delta =
              config.delta_range[0] +
              (config.delta_range[1] - config.delta_range[0]) * a / (g - 1);
          const double lambda =
              config.lambda_range[0] +
              (config.lambda_range[1] - config.lambda_range[0]) * b / (g - 1);
          const double mu =
              config.mu_range[0] +
              (config.mu_range[1] - config.mu_range[0]) * c / (g - 1);
          const ModelParams pv =
              ModelParams::make(0.0, 0.0, delta, lambda, mu, 0.0);
          const CycleCount cc = count_cycles(pv, false, config.scan, 0.0);
          absorb_sample(log, rep, pv, cc);
        }
      }
    }
    rep.stages.push_back(std::move(log));
  }
  if (rep.breach) return rep;

  sweep_stage(config.beta_stage, config.scan, "beta-sweep", false, rep);
  if (rep.breach) return rep;
  sweep_stage(config.alpha_stage, config.scan, "alpha-sweep", false, rep);
  if (rep.breach) return rep;

  // Stage (iv): rotation sweep, with Hopf marks from the closed form.
  if (config.gamma_stage.samples > 0) {
    const ModelParams& base = config.gamma_stage.base;
    try {
      const Census cen = full_census(base, false);
      for (const Equilibrium& e : cen.finite) {
        if (!is_antisaddle(e.classification)) continue;
        if (e.location.x < 1e-9 || e.location.y < 1e-9) continue;
        std::vector<BifurcationEvent> ev = hopf_detect(
            base, e, "gamma", std::min(config.gamma_stage.from, config.gamma_stage.to),
            std::max(config.gamma_stage.from, config.gamma_stage.to));
        if (!rep.stages.empty() && rep.stages.back().name == "gamma-hopf") {
          for (auto& x : ev) rep.stages.back().events.push_back(std::move(x));
        } else {
          StageLog hl;
          hl.name = "gamma-hopf";
          hl.events = std::move(ev);
          rep.stages.push_back(std::move(hl));
        }
      }
    } catch (const NumericError&) {
    }
    sweep_stage(config.gamma_stage, config.scan, "gamma-sweep", true, rep);
  }
  return rep;
}

}  // namespace qbl
