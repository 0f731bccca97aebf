#include "qbl/polynomial.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "qbl/error.hpp"

namespace qbl {

Poly poly_add(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly poly_scale(const Poly& a, double s) {
  Poly r = a;
  for (double& c : r) c *= s;
  return r;
}

Poly poly_derivative(const Poly& a) {
  if (a.size() <= 1) return {};
  Poly r(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * double(i);
  return r;
}

double poly_eval(const Poly& a, double x) {
  double v = 0.0;
  for (size_t i = a.size(); i-- > 0;) v = v * x + a[i];
  return v;
}

Poly poly_trim(const Poly& a, double rel_eps) {
  double scale = 0.0;
  for (double c : a) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  Poly r = a;
  while (!r.empty() && std::abs(r.back()) <= rel_eps * scale) r.pop_back();
  return r;
}

Poly poly_div_linear(const Poly& a, double b0, double b1) {
  // a(x) = (b0 + b1*x) q(x) + rem, coefficients matched from the top:
  // q[n-1] = a[n]/b1, then q[i-1] = (a[i] - b0*q[i]) / b1.
  if (a.size() <= 1) return {};
  const size_t n = a.size() - 1;
  Poly q(n, 0.0);
  q[n - 1] = a[n] / b1;
  for (size_t i = n - 1; i >= 1; --i) q[i - 1] = (a[i] - b0 * q[i]) / b1;
  return q;
}

std::vector<double> real_roots(const Poly& raw, double imag_tol) {
  Poly a = poly_trim(raw);
  std::vector<double> roots;
  if (a.size() <= 1) return roots;  // constant (or zero): no isolated roots

  if (a.size() == 2) {
    roots.push_back(-a[0] / a[1]);
    return roots;
  }
  if (a.size() == 3) {
    // Numerically stable quadratic formula.
    const double c = a[0], b = a[1], q2 = a[2];
    const double disc = b * b - 4.0 * q2 * c;
    if (disc < 0.0) return roots;
    const double s = std::sqrt(disc);
    const double t = -0.5 * (b + (b >= 0.0 ? s : -s));
    roots.push_back(t / q2);
    if (t != 0.0) roots.push_back(c / t);
    else roots.push_back(0.0);
    return roots;
  }

  const size_t n = a.size() - 1;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
  for (size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
  for (size_t i = 0; i < n; ++i) comp(i, n - 1) = -a[i] / a[n];

  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericError(ErrorCode::root_finding, "companion eigensolve failed");
  }

  const Poly da = poly_derivative(a);
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    const auto ev = solver.eigenvalues()[i];
    if (std::abs(ev.imag()) > imag_tol * (1.0 + std::abs(ev.real()))) continue;
    double x = ev.real();
    for (int it = 0; it < 3; ++it) {  // Newton polish
      const double f = poly_eval(a, x);
      const double df = poly_eval(da, x);
      if (df == 0.0) break;
      const double step = f / df;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

}  // namespace qbl
