#pragma once

#include <array>
#include <vector>

namespace maxwell {

/// Symmetric quadrature on the reference tetrahedron. Points are barycentric
/// coordinates; weights are normalized to sum to 1, so a physical integral is
/// |K| * sum_q w_q f(x_q).
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
  int degree = 0;
};

/// Cheapest built-in rule exact for polynomials of total degree <= `degree`:
/// the 4-point degree-2 rule, or the 14-point degree-5 rule. Each rule's
/// monomial exactness is checked once on first use. Throws InvalidArgument
/// for degree < 0 or > 5.
const QuadratureRule& tet_quadrature(int degree);

/// Largest relative error over monomials x^i y^j z^k, i+j+k <= rule.degree,
/// on the reference tetrahedron.
double quadrature_exactness_error(const QuadratureRule& rule);

}  // namespace maxwell
