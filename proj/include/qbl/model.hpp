#pragma once

#include "qbl/error.hpp"
#include "qbl/params.hpp"

namespace qbl {

// Denominator of the prey response, alpha*x^2 + beta*x + 1.
inline double denom(const ModelParams& p, double x) {
  return (p.alpha * x + p.beta) * x + 1.0;
}

inline double denom_prime(const ModelParams& p, double x) {
  return 2.0 * p.alpha * x + p.beta;
}

// Prey uptake x / (alpha*x^2 + beta*x + 1). Throws on a vanishing
// denominator (possible only when beta^2 - 4*alpha >= 0).
double response(const ModelParams& p, double x);

// Nontrivial prey zero-growth curve y = (1 - lambda*x) * denom(x).
inline double prey_isocline(const ModelParams& p, double x) {
  return (1.0 - p.lambda * x) * denom(p, x);
}

// Residual of the conic through all interior equilibria:
// y*(delta + mu*y) - x*(1 - lambda*x). Zero on both axes' equilibria too.
inline double ellipse_residual(const ModelParams& p, PhasePoint pt) {
  return pt.y * (p.delta + p.mu * pt.y) - pt.x * (1.0 - p.lambda * pt.x);
}

inline FieldValue eval_field(const ModelParams& p, PhasePoint pt) {
  const double a = denom(p, pt.x);
  const double P = pt.x * ((1.0 - p.lambda * pt.x) * a - pt.y);
  const double Q = -pt.y * ((p.delta + p.mu * pt.y) * a - pt.x);
  return {P, Q};
}

// Field rotated by gamma: (P - gamma*Q, Q + gamma*P). gamma = 0 gives the
// base field exactly; every base equilibrium stays an equilibrium for all
// gamma.
inline FieldValue eval_rotated_field(const ModelParams& p, PhasePoint pt) {
  const FieldValue f = eval_field(p, pt);
  return {f.dx - p.gamma * f.dy, f.dy + p.gamma * f.dx};
}

// Analytic Jacobian. rotated=true differentiates the rotated field; the
// determinant then scales by (1 + gamma^2) and the trace gains
// gamma*(Py - Qx), which is what the Hopf scan in gamma exploits.
Jacobian2 eval_jacobian(const ModelParams& p, PhasePoint pt, bool rotated);

struct RotationDeterminants {
  double d_alpha = 0.0;  // x^3 * y * ellipse_residual
  double d_beta = 0.0;   // x^2 * y * ellipse_residual
  double d_gamma = 0.0;  // P^2 + Q^2, nonnegative everywhere
};

RotationDeterminants rotation_determinants(const ModelParams& p, PhasePoint pt);

// Closed-form gamma at which the rotated-Jacobian trace at pt vanishes:
// -(Px+Qy)/(Py-Qx) with the unrotated entries. Throws when Py == Qx.
double hopf_gamma_closed_form(const ModelParams& p, PhasePoint pt);

}  // namespace qbl
