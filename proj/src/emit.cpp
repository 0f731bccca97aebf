#include "qbl/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "qbl/model.hpp"
#include "qbl/polynomial.hpp"

namespace qbl {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* verdict_name(CheckVerdict v) {
  switch (v) {
    case CheckVerdict::pass: return "pass";
    case CheckVerdict::fail: return "fail";
    default: return "inapplicable";
  }
}

nlohmann::ordered_json check_json(const CheckResult& r) {
  nlohmann::ordered_json j;
  j["verdict"] = verdict_name(r.verdict);
  j["detail"] = r.detail;
  return j;
}

}  // namespace

PlotWindow default_window(const ModelParams& p, const Census& c) {
  PlotWindow w;
  double xmax = 1.0 / p.lambda;
  double ymax = 1.0;
  for (const Equilibrium& e : c.finite) {
    xmax = std::max(xmax, e.location.x);
    ymax = std::max(ymax, e.location.y);
  }
  w.x0 = -0.5;
  w.x1 = 1.5 * xmax;
  w.y0 = p.mu > 0.0 ? -1.5 * p.delta / p.mu : -0.5;
  w.y1 = std::max(2.0, 1.4 * ymax);
  return w;
}

nlohmann::ordered_json census_to_json(const ModelParams& p, const Census& c,
                                      const std::vector<InfiniteSingularity>& inf,
                                      const ConfigurationReport& checks) {
  nlohmann::ordered_json doc;
  doc["schema"] = 1;
  doc["params"] = {{"alpha", p.alpha}, {"beta", p.beta},   {"delta", p.delta},
                   {"lambda", p.lambda}, {"mu", p.mu},     {"gamma", p.gamma}};
  doc["stage"] = to_string(stage_of(p));

  doc["finite"] = nlohmann::ordered_json::array();
  for (const Equilibrium& e : c.finite) {
    nlohmann::ordered_json row;
    row["x"] = e.location.x;
    row["y"] = e.location.y;
    row["classification"] = to_string(e.classification);
    row["index"] = e.index;
    row["eigenvalues"] = {{e.eigenvalues.re1, e.eigenvalues.im1},
                          {e.eigenvalues.re2, e.eigenvalues.im2}};
    row["residual"] = e.residual;
    doc["finite"].push_back(std::move(row));
  }

  doc["infinite"] = nlohmann::ordered_json::array();
  for (const InfiniteSingularity& s : inf) {
    nlohmann::ordered_json row;
    row["chart"] = s.chart == Chart::u ? "u" : "v";
    row["coordinate"] = s.coordinate;
    row["multiplicity"] = s.multiplicity;
    row["type"] = to_string(s.type);
    row["negative_side"] = to_string(s.negative_side);
    doc["infinite"].push_back(std::move(row));
  }

  doc["checks"] = nlohmann::ordered_json();
  doc["checks"]["index_identity"] = check_json(checks.index_identity);
  doc["checks"]["alternation"] = check_json(checks.alternation);
  doc["checks"]["quadrilateral"] = check_json(checks.quadrilateral);
  return doc;
}

std::string emit_census(const ModelParams& p, const Census& c,
                        const std::vector<InfiniteSingularity>& inf,
                        const ConfigurationReport& checks,
                        const std::string& format) {
  if (format == "json") return census_to_json(p, c, inf, checks).dump(2) + "\n";
  if (format != "csv") throw std::invalid_argument("format must be json or csv");
  std::ostringstream out;
  out << "type,chart,x_or_coord,y,classification,index,re1,im1,re2,im2,"
         "multiplicity,residual\n";
  for (const Equilibrium& e : c.finite) {
    out << "finite,," << num(e.location.x) << ',' << num(e.location.y) << ','
        << to_string(e.classification) << ',' << e.index << ','
        << num(e.eigenvalues.re1) << ',' << num(e.eigenvalues.im1) << ','
        << num(e.eigenvalues.re2) << ',' << num(e.eigenvalues.im2) << ",,"
        << num(e.residual) << '\n';
  }
  for (const InfiniteSingularity& s : inf) {
    out << "infinite," << (s.chart == Chart::u ? 'u' : 'v') << ','
        << num(s.coordinate) << ",," << to_string(s.type) << ",,,,,,"
        << s.multiplicity << ",\n";
  }
  return out.str();
}

Census census_from_json(const nlohmann::json& doc) {
  Census c;
  for (const auto& row : doc.at("finite")) {
    Equilibrium e;
    e.location = {row.at("x").get<double>(), row.at("y").get<double>()};
    e.index = row.at("index").get<int>();
    e.residual = row.at("residual").get<double>();
    e.eigenvalues.re1 = row.at("eigenvalues")[0][0].get<double>();
    e.eigenvalues.im1 = row.at("eigenvalues")[0][1].get<double>();
    e.eigenvalues.re2 = row.at("eigenvalues")[1][0].get<double>();
    e.eigenvalues.im2 = row.at("eigenvalues")[1][1].get<double>();
    const std::string name = row.at("classification").get<std::string>();
    for (int k = 0; k <= int(EquilibriumClass::degenerate); ++k) {
      if (name == to_string(EquilibriumClass(k))) {
        e.classification = EquilibriumClass(k);
        break;
      }
    }
    c.finite.push_back(std::move(e));
  }
  return c;
}

// ---------------------------------------------------------------------------
// SVG portrait
// ---------------------------------------------------------------------------

namespace {

struct Mapper {
  PlotWindow w;
  double sx(double x) const { return (x - w.x0) / (w.x1 - w.x0) * w.width; }
  double sy(double y) const { return w.height - (y - w.y0) / (w.y1 - w.y0) * w.height; }
  bool visible(PhasePoint q) const {
    return q.x >= w.x0 && q.x <= w.x1 && q.y >= w.y0 && q.y <= w.y1;
  }
};

void polyline(std::ostringstream& out, const Mapper& m,
              const std::vector<PhasePoint>& pts, const char* cls,
              const char* color, bool close = false) {
  if (pts.size() < 2) return;
  out << "<path class=\"" << cls << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.2\" d=\"";
  bool pen_up = true;
  for (const PhasePoint& q : pts) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) {
      pen_up = true;
      continue;
    }
    out << (pen_up ? 'M' : 'L') << num(m.sx(q.x)) << ' ' << num(m.sy(q.y));
    pen_up = false;
  }
  if (close) out << 'Z';
  out << "\"/>\n";
}

}  // namespace

std::string render_portrait(const ModelParams& p, const Census& c,
                            const std::vector<LimitCycle>& cycles,
                            const PlotWindow& window) {
  const Mapper m{window};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << window.width
      << "\" height=\"" << window.height << "\" viewBox=\"0 0 " << window.width
      << ' ' << window.height << "\">\n";
  out << "<rect width=\"" << window.width << "\" height=\"" << window.height
      << "\" fill=\"white\"/>\n";

  // axes
  polyline(out, m, {{window.x0, 0.0}, {window.x1, 0.0}}, "axis", "#888888");
  polyline(out, m, {{0.0, window.y0}, {0.0, window.y1}}, "axis", "#888888");

  // direction-field glyphs
  const int gx = 24, gy = 18;
  const double glyph = 0.35 * (window.x1 - window.x0) / gx;
  out << "<g class=\"field\" stroke=\"#b9c4d0\" stroke-width=\"1\">\n";
  for (int i = 0; i < gx; ++i) {
    for (int j = 0; j < gy; ++j) {
      const double x = window.x0 + (window.x1 - window.x0) * (i + 0.5) / gx;
      const double y = window.y0 + (window.y1 - window.y0) * (j + 0.5) / gy;
      const FieldValue f = eval_rotated_field(p, {x, y});
      const double n = std::hypot(f.dx, f.dy);
      if (n < 1e-14) continue;
      const double ux = f.dx / n * glyph, uy = f.dy / n * glyph;
      out << "<line x1=\"" << num(m.sx(x - 0.5 * ux)) << "\" y1=\""
          << num(m.sy(y - 0.5 * uy)) << "\" x2=\"" << num(m.sx(x + 0.5 * ux))
          << "\" y2=\"" << num(m.sy(y + 0.5 * uy)) << "\"/>\n";
      out << "<circle cx=\"" << num(m.sx(x + 0.5 * ux)) << "\" cy=\""
          << num(m.sy(y + 0.5 * uy)) << "\" r=\"1\" fill=\"#b9c4d0\"/>\n";
    }
  }
  out << "</g>\n";

  // prey zero-curve y = (1 - lambda x) A(x)
  const int ns = 400;
  std::vector<PhasePoint> prey;
  for (int i = 0; i <= ns; ++i) {
    const double x = window.x0 + (window.x1 - window.x0) * i / ns;
    const double y = prey_isocline(p, x);
    prey.push_back({x, std::clamp(y, window.y0 - 1.0, window.y1 + 1.0)});
  }
  polyline(out, m, prey, "isocline-prey", "#2e7d32");

  // predator zero-curve (delta + mu y) A(x) = x
  std::vector<PhasePoint> pred;
  if (p.mu > 0.0) {
    for (int i = 0; i <= ns; ++i) {
      const double x = window.x0 + (window.x1 - window.x0) * i / ns;
      const double a = denom(p, x);
      if (std::abs(a) < 1e-9) {
        pred.push_back({std::nan(""), std::nan("")});
        continue;
      }
      const double y = (x / a - p.delta) / p.mu;
      if (std::abs(y) > 4.0 * (std::abs(window.y0) + std::abs(window.y1))) {
        pred.push_back({std::nan(""), std::nan("")});
      } else {
        pred.push_back({x, y});
      }
    }
  } else {
    for (double r : real_roots(poly_trim(
             Poly{p.delta, p.delta * p.beta - 1.0, p.delta * p.alpha}, 1e-14))) {
      pred.push_back({r, window.y0});
      pred.push_back({r, window.y1});
      pred.push_back({std::nan(""), std::nan("")});
    }
  }
  polyline(out, m, pred, "isocline-predator", "#c62828");

  // the conic y(delta + mu y) = x(1 - lambda x)
  std::vector<PhasePoint> conic_hi, conic_lo;
  for (int i = 0; i <= ns; ++i) {
    const double x = window.x0 + (window.x1 - window.x0) * i / ns;
    if (p.mu > 0.0) {
      const double disc =
          p.delta * p.delta + 4.0 * p.mu * x * (1.0 - p.lambda * x);
      if (disc < 0.0) {
        conic_hi.push_back({std::nan(""), std::nan("")});
        conic_lo.push_back({std::nan(""), std::nan("")});
        continue;
      }
      const double s = std::sqrt(disc);
      conic_hi.push_back({x, (-p.delta + s) / (2.0 * p.mu)});
      conic_lo.push_back({x, (-p.delta - s) / (2.0 * p.mu)});
    } else {
      conic_hi.push_back({x, x * (1.0 - p.lambda * x) / p.delta});
    }
  }
  polyline(out, m, conic_hi, "conic", "#6a1b9a");
  if (!conic_lo.empty()) polyline(out, m, conic_lo, "conic", "#6a1b9a");

  // saddle separatrices
  for (const Equilibrium& e : c.finite) {
    if (e.classification != EquilibriumClass::saddle) continue;
    SeparatrixOptions so;
    so.t_span = 80.0;
    so.integrate.rtol = 1e-8;
    so.integrate.atol = 1e-10;
    so.integrate.blow_up_radius =
        20.0 * (std::abs(window.x1) + std::abs(window.y1) + 1.0);
    for (const Separatrix& sep : separatrices(p, e, true, so)) {
      std::vector<PhasePoint> pts;
      for (const OrbitState& s : sep.orbit.states) pts.push_back(s.x);
      polyline(out, m, pts, "separatrix", sep.unstable ? "#ef6c00" : "#1565c0");
    }
  }

  // limit cycles
  for (const LimitCycle& cyc : cycles) {
    out << "<path class=\"cycle\" fill=\"none\" stroke=\"#000000\" "
           "stroke-width=\"1.8\" d=\"";
    bool first = true;
    for (const PhasePoint& q : cyc.loop) {
      out << (first ? 'M' : 'L') << num(m.sx(q.x)) << ' ' << num(m.sy(q.y));
      first = false;
    }
    out << "Z\"/>\n";
  }

  // equilibrium markers, census order
  for (const Equilibrium& e : c.finite) {
    if (!m.visible(e.location)) continue;
    const double cx = m.sx(e.location.x), cy = m.sy(e.location.y);
    const char* cls = to_string(e.classification);
    if (e.classification == EquilibriumClass::saddle) {
      out << "<g class=\"equilibrium\" data-class=\"" << cls
          << "\" stroke=\"#000000\" stroke-width=\"1.6\">"
          << "<line x1=\"" << num(cx - 4) << "\" y1=\"" << num(cy - 4)
          << "\" x2=\"" << num(cx + 4) << "\" y2=\"" << num(cy + 4) << "\"/>"
          << "<line x1=\"" << num(cx - 4) << "\" y1=\"" << num(cy + 4)
          << "\" x2=\"" << num(cx + 4) << "\" y2=\"" << num(cy - 4) << "\"/>"
          << "</g>\n";
    } else {
      const bool stable = e.classification == EquilibriumClass::stable_node ||
                          e.classification == EquilibriumClass::stable_focus;
      out << "<circle class=\"equilibrium\" data-class=\"" << cls << "\" cx=\""
          << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"4\" stroke=\"#000000\" "
          << "fill=\"" << (stable ? "#000000" : "#ffffff") << "\"/>\n";
    }
  }

  out << "</svg>\n";
  return out.str();
}

std::string branch_csv(const CycleBranch& b) {
  std::ostringstream out;
  out << "parameter,s_star,period,derivative,stability\n";
  for (const BranchSample& s : b.samples) {
    out << num(s.value) << ',' << num(s.cycle.s_star) << ','
        << num(s.cycle.period) << ',' << num(s.cycle.derivative) << ','
        << to_string(s.cycle.stability) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json event_to_json(const BifurcationEvent& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  j["parameter"] = e.parameter;
  j["value"] = e.value;
  j["subject"] = {e.subject.x, e.subject.y};
  j["diagnostics"] = nlohmann::ordered_json();
  for (const auto& [k, v] : e.diagnostics) j["diagnostics"][k] = v;
  return j;
}

nlohmann::ordered_json cycle_to_json(const LimitCycle& c) {
  nlohmann::ordered_json j;
  j["s_star"] = c.s_star;
  j["period"] = c.period;
  j["derivative"] = c.derivative;
  j["stability"] = to_string(c.stability);
  if (std::isfinite(c.divergence_multiplier)) {
    j["divergence_multiplier"] = c.divergence_multiplier;
  }
  j["anchor"] = {c.section.anchor.x, c.section.anchor.y};
  j["loop_points"] = c.loop.size();
  return j;
}

nlohmann::ordered_json scenario_to_json(const ScenarioReport& r) {
  nlohmann::ordered_json j;
  j["total_samples"] = r.total_samples;
  j["max_simultaneous_cycles"] = r.max_simultaneous;
  j["max_concentric_cycles"] = r.max_concentric;
  j["breach"] = r.breach;
  if (r.breach) {
    j["breach_params"] = {{"alpha", r.breach_params.alpha},
                          {"beta", r.breach_params.beta},
                          {"delta", r.breach_params.delta},
                          {"lambda", r.breach_params.lambda},
                          {"mu", r.breach_params.mu},
                          {"gamma", r.breach_params.gamma}};
    j["breach_note"] = r.breach_note;
  }
  j["stages"] = nlohmann::ordered_json::array();
  for (const StageLog& s : r.stages) {
    nlohmann::ordered_json js;
    js["name"] = s.name;
    js["samples"] = s.samples;
    js["max_total"] = s.max_total;
    js["max_concentric"] = s.max_concentric;
    js["events"] = nlohmann::ordered_json::array();
    for (const BifurcationEvent& e : s.events) js["events"].push_back(event_to_json(e));
    j["stages"].push_back(std::move(js));
  }
  return j;
}

}  // namespace qbl
