#include "maxwell/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maxwell/error.hpp"

namespace maxwell {

namespace {

void add_orbit_31(QuadratureRule& r, double a, double w) {
  const double b = 1.0 - 3.0 * a;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 4> p{a, a, a, a};
    p[k] = b;
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

void add_orbit_22(QuadratureRule& r, double a, double w) {
  const double b = 0.5 - a;
  static constexpr std::array<std::array<int, 2>, 6> kPairs{{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};
  for (const auto& [i, j] : kPairs) {
    std::array<double, 4> p{b, b, b, b};
    p[i] = a;
    p[j] = a;
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

QuadratureRule make_degree2() {
  QuadratureRule r;
  r.degree = 2;
  add_orbit_31(r, 0.1381966011250105151795413165634361882280, 0.25);
  return r;
}

// Walkington's 14-point rule, exact through degree 5.
QuadratureRule make_degree5() {
  QuadratureRule r;
  r.degree = 5;
  add_orbit_31(r, 0.092735250310891226402, 0.073493043116361949544);
  add_orbit_31(r, 0.31088591926330060980, 0.11268792571801585080);
  add_orbit_22(r, 0.045503704125649649492, 0.042546020777081466438);
  return r;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

const QuadratureRule& checked(const QuadratureRule& r) {
  if (quadrature_exactness_error(r) > 1e-14) {
    throw std::logic_error("tetrahedral quadrature rule fails its exactness check");
  }
  return r;
}

}  // namespace

double quadrature_exactness_error(const QuadratureRule& rule) {
  double worst = 0.0;
  for (int d = 0; d <= rule.degree; ++d) {
    for (int i = 0; i <= d; ++i) {
      for (int j = 0; j <= d - i; ++j) {
        const int k = d - i - j;
        // Reference volume is 1/6; normalize to 1.
        const double exact = factorial(i) * factorial(j) * factorial(k) / factorial(d + 3) * 6.0;
        double q = 0.0;
        for (std::size_t p = 0; p < rule.points.size(); ++p) {
          const auto& l = rule.points[p];
          q += rule.weights[p] * std::pow(l[1], i) * std::pow(l[2], j) * std::pow(l[3], k);
        }
        worst = std::max(worst, std::abs(q - exact) / exact);
      }
    }
  }
  return worst;
}

const QuadratureRule& tet_quadrature(int degree) {
  static const QuadratureRule deg2 = checked(make_degree2());
  static const QuadratureRule deg5 = checked(make_degree5());
  if (degree < 0 || degree > 5) throw InvalidArgument("no tetrahedral rule for degree " + std::to_string(degree));
  return degree <= 2 ? deg2 : deg5;
}

}  // namespace maxwell
