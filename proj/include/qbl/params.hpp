#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace qbl {

// Plain phase-plane vector. Kept aggregate so the integrator inner loop stays flat.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 unit() const { double n = norm(); return {x / n, y / n}; }
  Vec2 perp() const { return {-y, x}; }  // rotate +90 degrees
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

using PhasePoint = Vec2;

struct FieldValue {
  double dx = 0.0;
  double dy = 0.0;
};

// Model parameters. alpha/beta shape the prey response denominator
// alpha*x^2 + beta*x + 1; delta/mu the predator loss; lambda the logistic
// cap; gamma rotates the whole field (0 = unrotated system).
struct ModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  double delta = 1.0;
  double lambda = 1.0;
  double mu = 1.0;
  double gamma = 0.0;

  // Strict construction: alpha >= 0, delta > 0, lambda > 0, mu >= 0 and
  // beta >= -2*sqrt(alpha) (the boundary is admitted; it is the double-root
  // case of the denominator and several workflows touch it exactly).
  static ModelParams make(double alpha, double beta, double delta,
                          double lambda, double mu, double gamma = 0.0);

  // Same positivity checks but beta unconstrained. The staged sweeps walk
  // through beta < -2*sqrt(alpha) territory on purpose (the denominator then
  // has real roots and extra axis equilibria); everything downstream is
  // plain polynomial arithmetic, so only the biological reading is lost.
  static ModelParams unchecked_beta(double alpha, double beta, double delta,
                                    double lambda, double mu, double gamma = 0.0);

  bool beta_in_range() const { return beta >= -2.0 * std::sqrt(alpha); }

  ModelParams with_gamma(double g) const {
    ModelParams q = *this;
    q.gamma = g;
    return q;
  }
};

enum class Stage { quadratic, cubic, quartic };

// Stage selection is by exact zero tests: the degree structure is discrete.
inline Stage stage_of(const ModelParams& p) {
  if (p.alpha != 0.0) return Stage::quartic;
  if (p.beta != 0.0) return Stage::cubic;
  return Stage::quadratic;
}

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::quadratic: return "quadratic";
    case Stage::cubic: return "cubic";
    default: return "quartic";
  }
}

inline int stage_degree(Stage s) {
  switch (s) {
    case Stage::quadratic: return 2;
    case Stage::cubic: return 3;
    default: return 4;
  }
}

// 2x2 Jacobian of the (possibly rotated) field: rows are gradients of the
// two components.
struct Jacobian2 {
  double px = 0.0, py = 0.0;  // d(xdot)/dx, d(xdot)/dy
  double qx = 0.0, qy = 0.0;  // d(ydot)/dx, d(ydot)/dy

  double trace() const { return px + qy; }
  double det() const { return px * qy - py * qx; }

  // Eigenvalues as two (re, im) pairs, sorted by re then im.
  struct Eigenvalues {
    double re1, im1, re2, im2;
    bool complex_pair() const { return im1 != 0.0; }
  };
  Eigenvalues eigenvalues() const;

  // Unit eigenvector for a real eigenvalue.
  Vec2 eigenvector(double eig) const;
};

}  // namespace qbl
