#include "maxwell/projections.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "maxwell/error.hpp"

namespace maxwell {

namespace {

double div_residual(const DeRhamComplex& complex, std::span<const double> beta) {
  return max_abs(spmv(complex.div(), beta));
}

ProjectionReport spd_projection(const CsrMatrix& m, const Vector& rhs, double tol) {
  CgOptions o;
  o.tol = tol;
  CgResult r = cg_solve(m, rhs, o);
  ProjectionReport rep;
  rep.coefficients = std::move(r.x);
  rep.solver_residual = r.relative_residual;
  rep.iterations = r.iterations;
  return rep;
}

}  // namespace

ProjectionReport l2_project_rt(const DeRhamComplex& complex, const VectorField& u, const ProjectionOptions& opts) {
  const CsrMatrix m = assemble_mass_rt(complex, TensorField::identity());
  ProjectionReport rep = spd_projection(m, assemble_rhs_rt(complex, u, opts.quad_degree), opts.tol);
  rep.div_residual = div_residual(complex, rep.coefficients);
  rep.l2_error = l2_error_field(complex, rep.coefficients, Space::RaviartThomas, u, opts.quad_degree);
  return rep;
}

ProjectionReport l2_project_nedelec(const DeRhamComplex& complex, const VectorField& u,
                                   const ProjectionOptions& opts) {
  const CsrMatrix m = assemble_mass_nedelec(complex, TensorField::identity());
  ProjectionReport rep = spd_projection(m, assemble_rhs_nedelec(complex, u, opts.quad_degree), opts.tol);
  rep.l2_error = l2_error_field(complex, rep.coefficients, Space::Nedelec, u, opts.quad_degree);
  return rep;
}

ProjectionReport riesz_project_nedelec(const DeRhamComplex& complex, const VectorField& u,
                                       const VectorField& curl_u, const ProjectionOptions& opts) {
  const CsrMatrix a = add(1.0, assemble_mass_nedelec(complex, TensorField::identity()), 1.0,
                          assemble_curl_curl(complex, TensorField::identity()));
  Vector rhs = assemble_rhs_nedelec(complex, u, opts.quad_degree);
  axpy(1.0, assemble_rhs_nedelec_curl(complex, curl_u, opts.quad_degree), rhs);
  ProjectionReport rep = spd_projection(a, rhs, opts.tol);
  const double e0 = l2_error_field(complex, rep.coefficients, Space::Nedelec, u, opts.quad_degree);
  const double e1 = l2_error_curl(complex, rep.coefficients, curl_u, opts.quad_degree);
  rep.l2_error = e0;
  rep.hcurl_error = std::sqrt(e0 * e0 + e1 * e1);
  return rep;
}

ProjectionReport constrained_project_rt(const DeRhamComplex& complex, const VectorField& b0,
                                        const ProjectionOptions& opts) {
  const CsrMatrix m = assemble_mass_rt(complex, TensorField::identity());
  // (div phi_j, 1_K) is the incidence entry D[K, j] for unit-flux basis fields.
  const CsrMatrix bt = transpose(complex.div());
  const Vector rhs = assemble_rhs_rt(complex, b0, opts.quad_degree);
  const Vector zero(complex.num_cells(), 0.0);
  SchurResult s = schur_solve(m, bt, rhs, zero, opts.tol);
  ProjectionReport rep;
  rep.coefficients = std::move(s.x);
  rep.multiplier = std::move(s.p);
  rep.solver_residual = s.primal_residual;
  rep.constraint_residual = s.constraint_residual;
  rep.iterations = s.outer_iterations;
  rep.div_residual = div_residual(complex, rep.coefficients);
  rep.l2_error = l2_error_field(complex, rep.coefficients, Space::RaviartThomas, b0, opts.quad_degree);
  return rep;
}

Vector snap_to_dyadic_grid(std::span<const double> v) {
  const double m = max_abs(v);
  Vector out(v.begin(), v.end());
  if (m == 0.0) return out;
  int e = 0;
  std::frexp(m, &e);  // m < 2^e
  const double quantum = std::ldexp(1.0, e - 44);
  for (double& x : out) x = std::nearbyint(x / quantum) * quantum;
  return out;
}

ProjectionReport potential_init_rt(const DeRhamComplex& complex, const VectorField& a0, const VectorField& curl_a0,
                                   const VectorField& b0_exact, const ProjectionOptions& opts) {
  ProjectionReport riesz = riesz_project_nedelec(complex, a0, curl_a0, opts);
  ProjectionReport rep;
  rep.coefficients = spmv(complex.curl_interior(), snap_to_dyadic_grid(riesz.coefficients));
  rep.solver_residual = riesz.solver_residual;
  rep.iterations = riesz.iterations;
  rep.hcurl_error = riesz.hcurl_error;
  rep.div_residual = div_residual(complex, rep.coefficients);
  if (b0_exact) {
    rep.l2_error = l2_error_field(complex, rep.coefficients, Space::RaviartThomas, b0_exact, opts.quad_degree);
  }
  return rep;
}

PointLocator::PointLocator(const DeRhamComplex& complex) : complex_(&complex) {
  const TetMesh& mesh = complex.mesh();
  if (mesh.num_vertices() == 0) throw InvalidArgument("PointLocator: empty mesh");
  Vec3 lo = mesh.vertices()[0], hi = lo;
  for (const Vec3& p : mesh.vertices()) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  dims_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::cbrt(static_cast<double>(mesh.num_cells()))));
  lower_ = lo;
  for (int a = 0; a < 3; ++a) cell_size_[a] = std::max((hi[a] - lo[a]) / static_cast<double>(dims_), 1e-300);
  buckets_.resize(dims_ * dims_ * dims_);

  auto axis_index = [&](double x, int a) {
    const double t = std::floor((x - lower_[a]) / cell_size_[a]);
    return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(dims_ - 1)));
  };
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto p = mesh.cell_points(c);
    std::array<std::size_t, 3> b0{}, b1{};
    for (int a = 0; a < 3; ++a) {
      double mn = p[0][a], mx = p[0][a];
      for (const Vec3& q : p) {
        mn = std::min(mn, q[a]);
        mx = std::max(mx, q[a]);
      }
      b0[a] = axis_index(mn, a);
      b1[a] = axis_index(mx, a);
    }
    for (std::size_t k = b0[2]; k <= b1[2]; ++k) {
      for (std::size_t j = b0[1]; j <= b1[1]; ++j) {
        for (std::size_t i = b0[0]; i <= b1[0]; ++i) buckets_[i + dims_ * (j + dims_ * k)].push_back(c);
      }
    }
  }
}

std::size_t PointLocator::bucket_of(const Vec3& p) const {
  std::array<std::size_t, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double t = std::floor((p[a] - lower_[a]) / cell_size_[a]);
    idx[a] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(dims_ - 1)));
  }
  return idx[0] + dims_ * (idx[1] + dims_ * idx[2]);
}

Index PointLocator::find(const Vec3& point) const {
  Index best = kNoIndex;
  double best_min = -1e-10;
  for (Index c : buckets_[bucket_of(point)]) {
    const auto l = barycentric(*complex_, c, point);
    const double mn = std::min({l[0], l[1], l[2], l[3]});
    if (mn >= best_min) {
      best_min = mn;
      best = c;
    }
  }
  if (best == kNoIndex) throw InvalidArgument("point lies outside the mesh");
  return best;
}

VectorField discrete_field(const DeRhamComplex& complex, Vector coefficients, Space space) {
  const std::size_t expected = space == Space::Nedelec ? complex.num_interior_edges() : complex.num_faces();
  if (coefficients.size() != expected) throw DimensionMismatch("discrete_field: coefficient count mismatch");
  auto locator = std::make_shared<const PointLocator>(complex);
  auto coeffs = std::make_shared<const Vector>(std::move(coefficients));
  return [&complex, locator, coeffs, space](const Vec3& x) {
    const Index c = locator->find(x);
    return space == Space::Nedelec ? eval_nedelec(complex, *coeffs, c, x) : eval_rt(complex, *coeffs, c, x);
  };
}

VectorField discrete_curl_field(const DeRhamComplex& complex, Vector coefficients) {
  if (coefficients.size() != complex.num_interior_edges()) {
    throw DimensionMismatch("discrete_curl_field: coefficient count mismatch");
  }
  auto locator = std::make_shared<const PointLocator>(complex);
  auto coeffs = std::make_shared<const Vector>(std::move(coefficients));
  return [&complex, locator, coeffs](const Vec3& x) { return eval_nedelec_curl(complex, *coeffs, locator->find(x)); };
}

}  // namespace maxwell
