#include "qbl/model.hpp"

#include <cmath>

namespace qbl {

double response(const ModelParams& p, double x) {
  const double a = denom(p, x);
  if (a == 0.0) {
    throw NumericError(ErrorCode::pole, "response denominator vanishes");
  }
  const double r = x / a;
  if (!std::isfinite(r)) {
    throw NumericError(ErrorCode::pole, "response overflow near denominator root");
  }
  return r;
}

Jacobian2 eval_jacobian(const ModelParams& p, PhasePoint pt, bool rotated) {
  const double x = pt.x, y = pt.y;
  const double a = denom(p, x);
  const double ap = denom_prime(p, x);
  const double one_lx = 1.0 - p.lambda * x;

  Jacobian2 j;
  j.px = one_lx * a - y + x * (-p.lambda * a + one_lx * ap);
  j.py = -x;
  j.qx = -y * ((p.delta + p.mu * y) * ap - 1.0);
  j.qy = -(p.delta + 2.0 * p.mu * y) * a + x;

  if (!rotated) return j;

  const double g = p.gamma;
  Jacobian2 r;
  r.px = j.px - g * j.qx;
  r.py = j.py - g * j.qy;
  r.qx = j.qx + g * j.px;
  r.qy = j.qy + g * j.py;
  return r;
}

RotationDeterminants rotation_determinants(const ModelParams& p, PhasePoint pt) {
  const double x = pt.x, y = pt.y;
  const double e = ellipse_residual(p, pt);
  const FieldValue f = eval_field(p, pt);
  RotationDeterminants d;
  d.d_beta = x * x * y * e;
  d.d_alpha = x * d.d_beta;
  d.d_gamma = f.dx * f.dx + f.dy * f.dy;
  return d;
}

double hopf_gamma_closed_form(const ModelParams& p, PhasePoint pt) {
  const Jacobian2 j = eval_jacobian(p, pt, false);
  const double denom_g = j.py - j.qx;
  if (denom_g == 0.0) {
    throw NumericError(ErrorCode::root_finding,
                       "trace is gamma-independent at this point");
  }
  return -(j.px + j.qy) / denom_g;
}

}  // namespace qbl
