#include "qbl/params.hpp"

#include <cmath>
#include <stdexcept>

namespace qbl {

namespace {

void check_positivity(double alpha, double delta, double lambda, double mu) {
  if (!(std::isfinite(alpha) && std::isfinite(delta) && std::isfinite(lambda) &&
        std::isfinite(mu))) {
    throw std::invalid_argument("model parameters must be finite");
  }
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  if (delta <= 0.0) throw std::invalid_argument("delta must be > 0");
  if (lambda <= 0.0) throw std::invalid_argument("lambda must be > 0");
  if (mu < 0.0) throw std::invalid_argument("mu must be >= 0");
}

}  // namespace

ModelParams ModelParams::make(double alpha, double beta, double delta,
                              double lambda, double mu, double gamma) {
  check_positivity(alpha, delta, lambda, mu);
  if (!std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("model parameters must be finite");
  }
  if (beta < -2.0 * std::sqrt(alpha)) {
    throw std::invalid_argument("beta must be >= -2*sqrt(alpha)");
  }
  return ModelParams{alpha, beta, delta, lambda, mu, gamma};
}

ModelParams ModelParams::unchecked_beta(double alpha, double beta, double delta,
                                        double lambda, double mu, double gamma) {
  check_positivity(alpha, delta, lambda, mu);
  if (!std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument("model parameters must be finite");
  }
  return ModelParams{alpha, beta, delta, lambda, mu, gamma};
}

Jacobian2::Eigenvalues Jacobian2::eigenvalues() const {
  const double tr = trace();
  const double d = det();
  const double disc = tr * tr - 4.0 * d;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    double a = 0.5 * (tr - s);
    double b = 0.5 * (tr + s);
    return {a, 0.0, b, 0.0};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {0.5 * tr, -im, 0.5 * tr, im};
}

Vec2 Jacobian2::eigenvector(double eig) const {
  // (J - eig*I) v = 0; pick the numerically larger row residual.
  const double a = px - eig, b = py, c = qx, d = qy - eig;
  Vec2 v;
  if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d)) {
    v = (std::abs(b) > std::abs(a)) ? Vec2{1.0, -a / b} : Vec2{-b / a, 1.0};
  } else {
    v = (std::abs(d) > std::abs(c)) ? Vec2{1.0, -c / d} : Vec2{-d / c, 1.0};
  }
  // Degenerate rows (diagonal matrix): fall back to coordinate axes.
  if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
    v = (std::abs(px - eig) <= std::abs(qy - eig)) ? Vec2{1.0, 0.0}
                                                   : Vec2{0.0, 1.0};
  }
  return v.unit();
}

}  // namespace qbl
