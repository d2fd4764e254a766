#pragma once

#include <functional>
#include <span>
#include <vector>

#include "maxwell/derham.hpp"
#include "maxwell/sparse.hpp"
#include "maxwell/vec3.hpp"

namespace maxwell {

/// Symmetric 3x3 material tensor: either constant per cell or an analytic
/// function of position sampled at quadrature points.
class TensorField {
 public:
  using Function = std::function<Mat3(const Vec3&)>;

  static TensorField identity() { return constant(Mat3::identity()); }
  static TensorField scalar(double s) { return constant(Mat3::identity(s)); }
  static TensorField constant(const Mat3& m);
  static TensorField per_cell(std::vector<Mat3> values);
  static TensorField analytic(Function f);

  Mat3 value(Index cell, const Vec3& point) const;
  TensorField scaled(double s) const;
  bool is_per_cell() const { return !fn_; }
  const std::vector<Mat3>& cell_values() const { return cells_; }

 private:
  std::vector<Mat3> cells_;  // size 1 means spatially constant
  Function fn_;
  double scale_ = 1.0;
};

/// Admissibility required of a tensor at every sample.
enum class Definiteness {
  Positive,      // epsilon, mu^{-1}: smallest eigenvalue > 0
  Semidefinite,  // sigma: smallest eigenvalue >= -1e-12 ||A||
};

/// Smallest eigenvalue of the symmetric part of m.
double min_eigenvalue(const Mat3& m);
/// Throws DataError if m is not symmetric to 1e-12 ||m|| or violates `kind`.
void check_tensor(const Mat3& m, Definiteness kind, const char* name);

using VectorField = std::function<Vec3(const Vec3&)>;
using SourceField = std::function<Vec3(const Vec3&, double)>;

/// (eps psi_i, psi_j) over interior edges. Quadrature degree 2 is exact for
/// cellwise-constant tensors.
CsrMatrix assemble_mass_nedelec(const DeRhamComplex& complex, const TensorField& eps, int quad_degree = 2);
/// (mu_inv phi_i, phi_j) over all faces.
CsrMatrix assemble_mass_rt(const DeRhamComplex& complex, const TensorField& mu_inv, int quad_degree = 2);
/// (sigma psi_i, psi_j) over interior edges; sigma only needs to be semidefinite.
CsrMatrix assemble_mass_sigma(const DeRhamComplex& complex, const TensorField& sigma, int quad_degree = 2);

/// Cpl[i][j] = (mu_inv phi_j, curl psi_i), interior edges x faces, built as
/// C_int^T M_RT(mu_inv) since curl psi_i has RT0 coordinates C[:, i].
CsrMatrix assemble_curl_coupling(const DeRhamComplex& complex, const TensorField& mu_inv);
/// Same matrix from direct quadrature of the integrand; kept as a cross-check.
CsrMatrix assemble_curl_coupling_quadrature(const DeRhamComplex& complex, const TensorField& mu_inv,
                                            int quad_degree = 2);
/// (w curl psi_i, curl psi_j) = C_int^T M_RT(w) C_int.
CsrMatrix assemble_curl_curl(const DeRhamComplex& complex, const TensorField& weight);

/// F_j = (f(., t), psi_j) over interior edges. Throws DataError on non-finite f.
Vector assemble_load(const DeRhamComplex& complex, const SourceField& f, double t, int quad_degree = 2);
/// (u, psi_j) for an analytic field, interior edges.
Vector assemble_rhs_nedelec(const DeRhamComplex& complex, const VectorField& u, int quad_degree);
/// (u, curl psi_j) for an analytic field, interior edges.
Vector assemble_rhs_nedelec_curl(const DeRhamComplex& complex, const VectorField& curl_u, int quad_degree);
/// (u, phi_j) for an analytic field, all faces.
Vector assemble_rhs_rt(const DeRhamComplex& complex, const VectorField& u, int quad_degree);

enum class Space { Nedelec, RaviartThomas };

/// sqrt( sum_K int_K |u_h - u|^2 ), per-cell quadrature of the given degree
/// (>= 2). Nedelec coefficients index interior edges, RT coefficients faces.
double l2_error_field(const DeRhamComplex& complex, std::span<const double> coefficients, Space space,
                      const VectorField& exact, int quad_degree = 4);
/// || curl u_h - curl_u ||_{L2} for an N0 field.
double l2_error_curl(const DeRhamComplex& complex, std::span<const double> coefficients,
                     const VectorField& exact_curl, int quad_degree = 4);
double l2_norm_field(const DeRhamComplex& complex, const VectorField& u, int quad_degree = 4);

}  // namespace maxwell
