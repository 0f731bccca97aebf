// Scratch harness used to discover and freeze the numbers in
// fixtures/regimes.json (parameter regimes, event locations, windows).
// Not part of the test suite; kept so fixtures can be regenerated.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qbl/bifurcation.hpp"
#include "qbl/compactification.hpp"
#include "qbl/dynamics.hpp"
#include "qbl/equilibria.hpp"
#include "qbl/error.hpp"
#include "qbl/model.hpp"

using namespace qbl;

namespace {

void print_census(const ModelParams& p, bool rotated) {
  const Census c = full_census(p, rotated);
  std::printf("# census (rotated=%d, gamma=%.12g)\n", rotated ? 1 : 0, p.gamma);
  for (const Equilibrium& e : c.finite) {
    std::printf("  (%.12g, %.12g) %-22s idx=%+d res=%.3g eig=(%.6g%+.6gi, %.6g%+.6gi)\n",
                e.location.x, e.location.y, to_string(e.classification), e.index,
                e.residual, e.eigenvalues.re1, e.eigenvalues.im1, e.eigenvalues.re2,
                e.eigenvalues.im2);
    if (is_antisaddle(e.classification) && e.location.x > 1e-9 && e.location.y > 1e-9) {
      std::printf("      hopf gamma* (closed form, base field) = %.12g\n",
                  hopf_gamma_closed_form(p.with_gamma(0.0), e.location));
    }
  }
  for (const InfiniteSingularity& s : infinite_census(p)) {
    std::printf("  inf %c @ %.12g m=%d %s / neg %s\n", s.chart == Chart::u ? 'u' : 'v',
                s.coordinate, s.multiplicity, to_string(s.type),
                to_string(s.negative_side));
  }
  const ConfigurationReport rep = verify_configuration(p, c, infinite_census(p));
  std::printf("  identity: %s  alternation: %s  quad: %s\n",
              rep.index_identity.detail.c_str(), rep.alternation.detail.c_str(),
              rep.quadrilateral.detail.c_str());
}

void print_cycles(const ModelParams& p, const ScanOptions& scan, double radius) {
  try {
    const CycleCount cc = count_cycles(p, true, scan, radius);
    const Census cen = full_census(p, true);
    std::printf("gamma=%.12g total=%d conc=%d rim=%d", p.gamma, cc.total,
                cc.max_concentric, cc.outward_at_rim ? 1 : 0);
    for (const LimitCycle& c : cc.cycles) {
      int enc = 0;
      for (const Equilibrium& e : cen.finite)
        if (e.location.x > 1e-9 && e.location.y > 1e-9 &&
            encloses(c.loop, e.location))
          ++enc;
      std::printf("  [s=%.9g T=%.9g d=%.9g %s enc=%d anchor=(%.4g,%.4g)]", c.s_star,
                  c.period, c.derivative, to_string(c.stability), enc,
                  c.section.anchor.x, c.section.anchor.y);
    }
    std::printf("\n");
  } catch (const NumericError& e) {
    std::printf("gamma=%.12g ERROR %s\n", p.gamma, e.what());
  }
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fixture discovery scratchpad"};
  app.require_subcommand(1);
  app.fallthrough();

  double alpha = 0, beta = 0, delta = 0.5, lambda = 1, mu = 1, gamma = 0;
  app.add_option("--alpha", alpha);
  app.add_option("--beta", beta);
  app.add_option("--delta", delta);
  app.add_option("--lambda", lambda);
  app.add_option("--mu", mu);
  app.add_option("--gamma", gamma);
  bool strict = false;
  app.add_flag("--strict", strict, "strict scan options instead of sweep grade");

  auto* cen = app.add_subcommand("census", "census + closed-form hopf gammas");
  bool rotated = false;
  cen->add_flag("--rotated", rotated);

  auto* gs = app.add_subcommand("gscan", "cycle counts over a gamma range");
  double g_from = 0, g_to = 1, radius = 0;
  int g_n = 40;
  gs->add_option("--from", g_from)->required();
  gs->add_option("--to", g_to)->required();
  gs->add_option("--n", g_n);
  gs->add_option("--radius", radius);

  auto* as = app.add_subcommand("ascan", "cycle counts over an alpha range");
  double a_from = 0, a_to = 1;
  int a_n = 40;
  as->add_option("--from", a_from)->required();
  as->add_option("--to", a_to)->required();
  as->add_option("--n", a_n);
  as->add_option("--radius", radius);

  auto* homo = app.add_subcommand("homo", "homoclinic split scan in a parameter");
  std::string h_param = "gamma";
  double h_from = 0, h_to = 1;
  int h_n = 120;
  homo->add_option("--param", h_param);
  homo->add_option("--from", h_from)->required();
  homo->add_option("--to", h_to)->required();
  homo->add_option("--n", h_n);

  auto* br = app.add_subcommand("branch", "continue first cycle in a parameter");
  std::string b_param = "gamma";
  double b_to = 0, b_period_cap = 1e3, b_length = 0;
  int b_index = 0;
  br->add_option("--param", b_param);
  br->add_option("--to", b_to)->required();
  br->add_option("--period-cap", b_period_cap);
  br->add_option("--cycle-index", b_index);
  br->add_option("--length", b_length);

  auto* ab = app.add_subcommand("abgrid", "count interior points over (alpha,beta)");
  double ab_a0 = 0.05, ab_a1 = 1.0, ab_b0 = -2.0, ab_b1 = 0.0;
  int ab_n = 24;
  ab->add_option("--a0", ab_a0);
  ab->add_option("--a1", ab_a1);
  ab->add_option("--b0", ab_b0);
  ab->add_option("--b1", ab_b1);
  ab->add_option("--n", ab_n);

  auto* hs = app.add_subcommand("hopfside",
                                "bounded-orbit probe on the unstable side of each hopf");
  double hs_off = 0.02;
  hs->add_option("--offset", hs_off);

  auto* tc = app.add_subcommand("twingrid",
                                "lattice hunt for shield-friendly regimes");
  double tc_m2b = 1.35, tc_m1b = 0.8, tc_bmin = 0.15;
  tc->add_option("--m2b", tc_m2b);
  tc->add_option("--m1b", tc_m1b);
  tc->add_option("--bmin", tc_bmin);

  auto* ob = app.add_subcommand("orbit", "integrate one orbit, report extent");
  double ob_x = 1, ob_y = 1, ob_t = 200;
  ob->add_option("--x0", ob_x)->required();
  ob->add_option("--y0", ob_y)->required();
  ob->add_option("--t", ob_t);

  CLI11_PARSE(app, argc, argv);

  const ModelParams base = ModelParams::unchecked_beta(alpha, beta, delta, lambda, mu, gamma);
  const ScanOptions scan = strict ? ScanOptions{} : sweep_scan_options();

  try {
    if (*cen) print_census(base, rotated);

    if (*gs) {
      for (int i = 0; i < g_n; ++i) {
        const double g = g_from + (g_to - g_from) * i / std::max(1, g_n - 1);
        print_cycles(base.with_gamma(g), scan, radius);
      }
    }

    if (*as) {
      for (int i = 0; i < a_n; ++i) {
        const double a = a_from + (a_to - a_from) * i / std::max(1, a_n - 1);
        print_cycles(with_param(base, "alpha", a), scan, radius);
      }
    }

    if (*homo) {
      const Census c = full_census(base, true);
      for (const Equilibrium& e : c.finite) {
        if (e.classification != EquilibriumClass::saddle) continue;
        if (e.location.x <= 1e-9 || e.location.y <= -1e-6) continue;
        std::printf("# saddle (%.12g, %.12g)\n", e.location.x, e.location.y);
        HomoclinicOptions opt;
        opt.samples = h_n;
        for (const BifurcationEvent& ev :
             homoclinic_scan(base, e, h_param, h_from, h_to, opt)) {
          std::printf("  %s at %s=%.12g subj=(%.6g,%.6g)", to_string(ev.kind),
                      ev.parameter.c_str(), ev.value, ev.subject.x, ev.subject.y);
          for (const auto& [k, v] : ev.diagnostics)
            std::printf(" %s=%.6g", k.c_str(), v);
          std::printf("\n");
        }
      }
    }

    if (*br) {
      const Census c = full_census(base, true);
      PhasePoint anchor{};
      for (const Equilibrium& e : c.finite)
        if (is_antisaddle(e.classification) && e.location.x > 1e-9 && e.location.y > 1e-9) {
          anchor = e.location;
          break;
        }
      double spread = 1;
      for (const Equilibrium& e : c.finite) spread = std::max(spread, e.location.norm());
      const Section sec =
          section_from(base, anchor, b_length > 0 ? b_length : 3 * (1 + spread), true);
      const std::vector<LimitCycle> cycles = find_cycles(base, sec, true, scan);
      std::printf("# %zu cycle(s) at start\n", cycles.size());
      if (b_index < 0 || static_cast<size_t>(b_index) >= cycles.size()) return 1;
      ContinuationPolicy pol;
      pol.to = b_to;
      pol.scan = scan;
      pol.period_cap = b_period_cap;
      const CycleBranch branch = continue_cycle(base, cycles[b_index], b_param, pol);
      std::printf("# termination: %s after %zu samples\n", to_string(branch.termination),
                  branch.samples.size());
      const size_t n = branch.samples.size();
      for (size_t i = 0; i < n; ++i) {
        if (n > 20 && i > 5 && i + 6 < n) continue;
        const BranchSample& s = branch.samples[i];
        std::printf("  %s=%.12g s=%.9g T=%.9g d=%.9g %s\n", b_param.c_str(), s.value,
                    s.cycle.s_star, s.cycle.period, s.cycle.derivative,
                    to_string(s.cycle.stability));
      }
      for (const auto& [k, v] : branch.diagnostics)
        std::printf("# %s=%.12g\n", k.c_str(), v);
    }

    if (*ab) {
      for (int i = 0; i < ab_n; ++i) {
        const double a = ab_a0 + (ab_a1 - ab_a0) * i / std::max(1, ab_n - 1);
        for (int k = 0; k < ab_n; ++k) {
          const double b = ab_b0 + (ab_b1 - ab_b0) * k / std::max(1, ab_n - 1);
          ModelParams q = ModelParams::unchecked_beta(a, b, delta, lambda, mu, 0.0);
          try {
            const Census c = full_census(q, false);
            int sad = 0, anti = 0;
            std::string cols;
            for (const Equilibrium& e : c.finite) {
              if (e.location.x <= 1e-9 || e.location.y <= 1e-9) continue;
              if (e.classification == EquilibriumClass::saddle) ++sad;
              if (is_antisaddle(e.classification)) {
                ++anti;
                char buf[64];
                std::snprintf(buf, sizeof buf, "  x=%.4g g*=%.5g",
                              e.location.x, hopf_gamma_closed_form(q, e.location));
                cols += buf;
              }
            }
            if (sad >= 1 && anti >= 2)
              std::printf("alpha=%.6g beta=%.6g interior: %d antisaddle %d saddle%s\n",
                          a, b, anti, sad, cols.c_str());
          } catch (const NumericError&) {
          }
        }
      }
    }

    if (*tc) {
      const double as[] = {0.3, 0.5, 0.8, 1.3, 2.0, 3.0};
      const double bf[] = {-1.9, -1.65, -1.4, -1.15, -0.9, -0.6, -0.3};
      const double ds[] = {0.05, 0.1, 0.2, 0.35, 0.5, 0.8};
      const double ls[] = {0.1, 0.15, 0.22, 0.3, 0.4};
      const double ms[] = {0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
      for (double a : as)
        for (double bfr : bf)
          for (double d : ds)
            for (double l : ls)
              for (double m : ms) {
                const double b = bfr * std::sqrt(a);
                const ModelParams q =
                    ModelParams::unchecked_beta(a, b, d, l, m, 0.0);
                try {
                  const Census c = full_census(q, false);
                  int sad = 0;
                  std::vector<const Equilibrium*> anti;
                  for (const Equilibrium& e : c.finite) {
                    if (e.location.x <= 1e-9 || e.location.y <= 1e-9) continue;
                    if (e.classification == EquilibriumClass::saddle) ++sad;
                    if (is_antisaddle(e.classification)) anti.push_back(&e);
                  }
                  if (sad < 1 || anti.size() != 2) continue;
                  if (anti[0]->location.x > anti[1]->location.x)
                    std::swap(anti[0], anti[1]);
                  const double m1 =
                      -hopf_gamma_closed_form(q, anti[0]->location);
                  const double m2 =
                      -hopf_gamma_closed_form(q, anti[1]->location);
                  if (m2 <= 0.0) continue;
                  const double x2 = anti[1]->location.x;
                  const double A2 = (a * x2 + b) * x2 + 1.0;
                  const double head = 1.0 - d * A2 / x2;
                  if (head < tc_bmin) continue;
                  if (m2 > tc_m2b * head) continue;
                  if (std::max(m1, 0.0) > tc_m1b * head) continue;
                  std::printf("a=%.4g b=%.6g d=%.4g l=%.4g m=%.4g  "
                              "A1=(%.4g,%.4g) m1=%.5g  A2=(%.4g,%.4g) m2=%.5g  "
                              "B=%.4g m2/B=%.3f\n",
                              a, b, d, l, m, anti[0]->location.x,
                              anti[0]->location.y, m1, anti[1]->location.x,
                              anti[1]->location.y, m2, head, m2 / head);
                } catch (const NumericError&) {
                }
              }
      std::fflush(stdout);
    }

    if (*ob) {
      IntegrateOptions io;
      io.rtol = 1e-8;
      io.atol = 1e-10;
      double rmax = 0.0, rmin = 1e300, t_done = 0.0;
      Vec2 fin{ob_x, ob_y};
      const char* why = "time-limit";
      const int chunks = 200;
      for (int k = 0; k < chunks; ++k) {
        try {
          const Orbit orb =
              flow(ModelField{base, true}, fin, ob_t / chunks, io);
          for (const OrbitState& st : orb.states) {
            const double r = std::hypot(st.x.x, st.x.y);
            rmax = std::max(rmax, r);
            rmin = std::min(rmin, r);
          }
          fin = orb.states.back().x;
          t_done += orb.states.back().t;
          why = to_string(orb.reason);
          if (orb.reason != TerminalReason::time_limit) break;
        } catch (const NumericError&) {
          why = "step-underflow";
          break;
        }
      }
      std::printf("gamma=%.6g start=(%.4g,%.4g) end=(%.6g,%.6g) rmin=%.5g "
                  "rmax=%.5g t=%.4g  %s\n",
                  base.gamma, ob_x, ob_y, fin.x, fin.y, rmin, rmax, t_done,
                  why);
    }

    if (*hs) {
      const ModelParams b0 = base.with_gamma(0.0);
      const Census c = full_census(b0, true);
      for (const Equilibrium& e : c.finite) {
        if (!is_antisaddle(e.classification) || e.location.x <= 1e-9 ||
            e.location.y <= 1e-9)
          continue;
        const double g_star = hopf_gamma_closed_form(b0, e.location);
        const double h = 1e-3 * (1.0 + std::abs(g_star));
        const double tr_p =
            eval_jacobian(b0.with_gamma(g_star + h), e.location, true).trace();
        const double tr_m =
            eval_jacobian(b0.with_gamma(g_star - h), e.location, true).trace();
        const double side = tr_p > tr_m ? 1.0 : -1.0;
        const double g_test = g_star + side * hs_off * (1.0 + std::abs(g_star));
        double cap = 1e300;
        for (const Equilibrium& o : c.finite)
          if (o.classification == EquilibriumClass::saddle)
            cap = std::min(cap, (o.location - e.location).norm());
        cap = std::min(0.7 * cap, 0.5 * (1.0 + e.location.norm()));
        const double r0 = 0.01 * (1.0 + e.location.norm());
        IntegrateOptions io;
        io.rtol = 1e-8;
        io.atol = 1e-10;
        double r_max = 0.0, r_fin = 0.0;
        bool bounded = false;
        try {
          const Orbit orb = flow(ModelField{b0.with_gamma(g_test), true},
                                 e.location + Vec2{r0, 0.0}, 400.0, io);
          for (const OrbitState& st : orb.states)
            r_max = std::max(r_max, (st.x - e.location).norm());
          r_fin = orb.states.empty() ? 0.0
                                     : (orb.states.back().x - e.location).norm();
          bounded = r_max < cap && orb.reason == TerminalReason::time_limit;
        } catch (const NumericError&) {
          r_max = r_fin = 1e300;  // finite-time blow-up: escaped
        }
        std::printf("  (%.6g,%.6g) g*=%.9g test=%.9g rfin=%.4g rmax=%.4g cap=%.3g %s\n",
                    e.location.x, e.location.y, g_star, g_test, r_fin, r_max, cap,
                    bounded ? "BOUNDED" : "escaped");
      }
    }
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
