#pragma once

#include <vector>

namespace qbl {

// Dense univariate polynomial, coefficients ascending: c[0] + c[1]*x + ...
using Poly = std::vector<double>;

Poly poly_add(const Poly& a, const Poly& b);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_scale(const Poly& a, double s);
Poly poly_derivative(const Poly& a);
double poly_eval(const Poly& a, double x);

// Drop leading coefficients smaller than rel_eps times the largest |coeff|.
Poly poly_trim(const Poly& a, double rel_eps = 1e-13);

// Exact-ish division by (b0 + b1*x); the remainder is discarded (callers use
// this only when the factor is known analytically).
Poly poly_div_linear(const Poly& a, double b0, double b1);

// Real roots via the balanced companion matrix, each polished by one or two
// Newton steps. Eigenvalues with |Im| <= imag_tol*(1+|Re|) count as real.
std::vector<double> real_roots(const Poly& a, double imag_tol = 1e-8);

}  // namespace qbl
