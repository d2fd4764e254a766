#pragma once

#include <optional>
#include <span>
#include <vector>

#include "maxwell/assembly.hpp"
#include "maxwell/derham.hpp"
#include "maxwell/sparse.hpp"

namespace maxwell {

struct ProjectionReport {
  Vector coefficients;        // interior edges (N0) or faces (RT0)
  Vector multiplier;          // constrained projection only, one entry per cell
  double solver_residual = 0.0;
  double constraint_residual = 0.0;  // constrained projection only
  std::size_t iterations = 0;
  /// max_K |int_K div u_h| for RT0 results.
  double div_residual = 0.0;
  /// ||u - u_h||_{L2} against the projected field.
  std::optional<double> l2_error;
  /// Riesz projection only: ||u - u_h||_{H(curl)}.
  std::optional<double> hcurl_error;
};

struct ProjectionOptions {
  double tol = 1e-12;
  /// Degree of the rule for right-hand sides and error norms.
  int quad_degree = 4;
};

/// L2-orthogonal projection onto RT_h: M_RT c = ((u, phi_i))_i.
ProjectionReport l2_project_rt(const DeRhamComplex& complex, const VectorField& u, const ProjectionOptions& = {});

/// L2-orthogonal projection onto N_h^0 (interior edges).
ProjectionReport l2_project_nedelec(const DeRhamComplex& complex, const VectorField& u,
                                   const ProjectionOptions& = {});

/// Riesz projection on H_0(curl): (M + K_curl) c = ((u, psi_i) + (curl u, curl psi_i))_i.
/// The curl is an analytic input and is never approximated numerically.
ProjectionReport riesz_project_nedelec(const DeRhamComplex& complex, const VectorField& u,
                                       const VectorField& curl_u, const ProjectionOptions& = {});

/// L2 projection of B0 onto Z_h = {v in RT_h : div v = 0 in Q_h}, through the
/// mixed system [M_RT D^T; D 0].
ProjectionReport constrained_project_rt(const DeRhamComplex& complex, const VectorField& b0,
                                        const ProjectionOptions& = {.tol = 1e-11});

/// B_h(0) = curl R_h A0, i.e. C_int times the Riesz coefficients of A0.
/// A0 must have vanishing tangential trace (not checked). The edge
/// coefficients are rounded onto a dyadic grid 2^-44 below their largest
/// magnitude first, so C alpha and D C alpha are formed without rounding and
/// the cellwise divergence is exactly zero.
ProjectionReport potential_init_rt(const DeRhamComplex& complex, const VectorField& a0, const VectorField& curl_a0,
                                   const VectorField& b0_exact = {}, const ProjectionOptions& = {});

/// Rounds every entry to a common multiple of 2^(e-44), where 2^e bounds max|v|.
Vector snap_to_dyadic_grid(std::span<const double> v);

/// Locates the cell containing a point (bucketed search over cell bounding boxes).
class PointLocator {
 public:
  explicit PointLocator(const DeRhamComplex& complex);
  /// Throws InvalidArgument if no cell contains the point.
  Index find(const Vec3& point) const;

 private:
  const DeRhamComplex* complex_;
  Vec3 lower_, cell_size_;
  std::size_t dims_ = 1;
  std::vector<std::vector<Index>> buckets_;
  std::size_t bucket_of(const Vec3& p) const;
};

/// Wraps discrete coefficients as a field evaluable anywhere in the mesh.
/// The complex must outlive the returned callable.
VectorField discrete_field(const DeRhamComplex& complex, Vector coefficients, Space space);
/// Piecewise-constant curl of an N0 field, as an evaluable field.
VectorField discrete_curl_field(const DeRhamComplex& complex, Vector coefficients);

}  // namespace maxwell
