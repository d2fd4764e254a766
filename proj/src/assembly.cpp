#include "maxwell/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "maxwell/error.hpp"
#include "maxwell/quadrature.hpp"

namespace maxwell {

TensorField TensorField::constant(const Mat3& m) {
  TensorField t;
  t.cells_ = {m};
  return t;
}

TensorField TensorField::per_cell(std::vector<Mat3> values) {
  if (values.empty()) throw InvalidArgument("per-cell tensor field needs at least one value");
  TensorField t;
  t.cells_ = std::move(values);
  return t;
}

TensorField TensorField::analytic(Function f) {
  if (!f) throw InvalidArgument("analytic tensor field needs a callable");
  TensorField t;
  t.fn_ = std::move(f);
  return t;
}

Mat3 TensorField::value(Index cell, const Vec3& point) const {
  Mat3 m;
  if (fn_) {
    m = fn_(point);
  } else if (cells_.size() == 1) {
    m = cells_[0];
  } else {
    if (cell >= cells_.size()) throw InvalidArgument("per-cell tensor field has no value for cell " + std::to_string(cell));
    m = cells_[cell];
  }
  return scale_ == 1.0 ? m : m.scaled(scale_);
}

TensorField TensorField::scaled(double s) const {
  TensorField t = *this;
  t.scale_ *= s;
  return t;
}

double min_eigenvalue(const Mat3& a) {
  // Closed-form eigenvalues of a symmetric 3x3 matrix.
  const double m00 = a(0, 0), m11 = a(1, 1), m22 = a(2, 2);
  const double m01 = 0.5 * (a(0, 1) + a(1, 0));
  const double m02 = 0.5 * (a(0, 2) + a(2, 0));
  const double m12 = 0.5 * (a(1, 2) + a(2, 1));
  const double p1 = m01 * m01 + m02 * m02 + m12 * m12;
  if (p1 == 0.0) return std::min({m00, m11, m22});
  const double q = (m00 + m11 + m22) / 3.0;
  const double p2 = (m00 - q) * (m00 - q) + (m11 - q) * (m11 - q) + (m22 - q) * (m22 - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  const double b00 = (m00 - q) / p, b11 = (m11 - q) / p, b22 = (m22 - q) / p;
  const double b01 = m01 / p, b02 = m02 / p, b12 = m12 / p;
  const double det_b =
      b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
  const double r = std::clamp(det_b / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

void check_tensor(const Mat3& m, Definiteness kind, const char* name) {
  double norm_sq = 0.0, asym_sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (!std::isfinite(m(i, j))) throw DataError(std::string(name) + ": non-finite tensor entry");
      norm_sq += m(i, j) * m(i, j);
      asym_sq += (m(i, j) - m(j, i)) * (m(i, j) - m(j, i));
    }
  }
  const double nrm = std::sqrt(norm_sq);
  if (std::sqrt(asym_sq) > 1e-12 * nrm) throw DataError(std::string(name) + ": tensor is not symmetric");
  const double lmin = min_eigenvalue(m);
  if (kind == Definiteness::Positive && !(lmin > 0.0)) {
    throw DataError(std::string(name) + ": tensor is not positive definite (min eigenvalue " + std::to_string(lmin) +
                    ")");
  }
  if (kind == Definiteness::Semidefinite && lmin < -1e-12 * std::max(nrm, 1.0)) {
    throw DataError(std::string(name) + ": tensor is not positive semidefinite (min eigenvalue " +
                    std::to_string(lmin) + ")");
  }
}

namespace {

Vec3 physical_point(const std::array<Vec3, 4>& p, const std::array<double, 4>& l) {
  return l[0] * p[0] + l[1] * p[1] + l[2] * p[2] + l[3] * p[3];
}

// Edge basis values at barycentric point l (global orientation).
std::array<Vec3, 6> edge_basis(const WhitneyCell& w, const std::array<double, 4>& l) {
  std::array<Vec3, 6> out;
  for (int le = 0; le < 6; ++le) {
    const auto [a, b] = kLocalEdges[le];
    out[le] = static_cast<double>(w.edge_sign[le]) * (l[a] * w.grad_lambda[b] - l[b] * w.grad_lambda[a]);
  }
  return out;
}

std::array<Vec3, 4> face_basis(const WhitneyCell& w, const std::array<Vec3, 4>& p, const Vec3& x) {
  std::array<Vec3, 4> out;
  for (int lf = 0; lf < 4; ++lf) out[lf] = (w.face_sign[lf] / (3.0 * w.volume)) * (x - p[lf]);
  return out;
}

std::array<Vec3, 6> edge_curls(const WhitneyCell& w) {
  std::array<Vec3, 6> out;
  for (int le = 0; le < 6; ++le) {
    const auto [a, b] = kLocalEdges[le];
    out[le] = (2.0 * w.edge_sign[le]) * cross(w.grad_lambda[a], w.grad_lambda[b]);
  }
  return out;
}

CsrMatrix edge_mass(const DeRhamComplex& complex, const TensorField& tensor, Definiteness kind, const char* name,
                    int quad_degree) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  std::vector<Triplet> t;
  t.reserve(36 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const WhitneyCell& w = complex.whitney(c);
    const auto p = mesh.cell_points(c);
    const auto& edges = mesh.cell_edges(c);
    std::array<Index, 6> slot;
    bool any = false;
    for (int le = 0; le < 6; ++le) {
      slot[le] = complex.interior_edge_slot(edges[le]);
      any = any || slot[le] != kNoIndex;
    }
    if (!any) {
      // Still validate the coefficient on cells that contribute nothing.
      for (const auto& l : rule.points) check_tensor(tensor.value(c, physical_point(p, l)), kind, name);
      continue;
    }
    std::array<std::array<double, 6>, 6> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const Mat3 m = tensor.value(c, physical_point(p, l));
      check_tensor(m, kind, name);
      const auto basis = edge_basis(w, l);
      const double wq = rule.weights[q] * w.volume;
      for (int i = 0; i < 6; ++i) {
        const Vec3 mi = m * basis[i];
        for (int j = 0; j < 6; ++j) local[i][j] += wq * dot(mi, basis[j]);
      }
    }
    for (int i = 0; i < 6; ++i) {
      if (slot[i] == kNoIndex) continue;
      for (int j = 0; j < 6; ++j) {
        if (slot[j] == kNoIndex) continue;
        t.push_back({slot[i], slot[j], local[i][j]});
      }
    }
  }
  const std::size_t n = complex.num_interior_edges();
  return CsrMatrix::from_triplets(n, n, std::move(t));
}

}  // namespace

CsrMatrix assemble_mass_nedelec(const DeRhamComplex& complex, const TensorField& eps, int quad_degree) {
  return edge_mass(complex, eps, Definiteness::Positive, "epsilon", quad_degree);
}

CsrMatrix assemble_mass_sigma(const DeRhamComplex& complex, const TensorField& sigma, int quad_degree) {
  return edge_mass(complex, sigma, Definiteness::Semidefinite, "sigma", quad_degree);
}

CsrMatrix assemble_mass_rt(const DeRhamComplex& complex, const TensorField& mu_inv, int quad_degree) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  std::vector<Triplet> t;
  t.reserve(16 * mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const WhitneyCell& w = complex.whitney(c);
    const auto p = mesh.cell_points(c);
    const auto& faces = mesh.cell_faces(c);
    std::array<std::array<double, 4>, 4> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 x = physical_point(p, rule.points[q]);
      const Mat3 m = mu_inv.value(c, x);
      check_tensor(m, Definiteness::Positive, "mu_inv");
      const auto basis = face_basis(w, p, x);
      const double wq = rule.weights[q] * w.volume;
      for (int i = 0; i < 4; ++i) {
        const Vec3 mi = m * basis[i];
        for (int j = 0; j < 4; ++j) local[i][j] += wq * dot(mi, basis[j]);
      }
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) t.push_back({faces[i], faces[j], local[i][j]});
    }
  }
  return CsrMatrix::from_triplets(complex.num_faces(), complex.num_faces(), std::move(t));
}

CsrMatrix assemble_curl_coupling(const DeRhamComplex& complex, const TensorField& mu_inv) {
  return multiply(transpose(complex.curl_interior()), assemble_mass_rt(complex, mu_inv));
}

CsrMatrix assemble_curl_coupling_quadrature(const DeRhamComplex& complex, const TensorField& mu_inv,
                                            int quad_degree) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  std::vector<Triplet> t;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const WhitneyCell& w = complex.whitney(c);
    const auto p = mesh.cell_points(c);
    const auto& edges = mesh.cell_edges(c);
    const auto& faces = mesh.cell_faces(c);
    const auto curls = edge_curls(w);
    std::array<std::array<double, 4>, 6> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 x = physical_point(p, rule.points[q]);
      const Mat3 m = mu_inv.value(c, x);
      check_tensor(m, Definiteness::Positive, "mu_inv");
      const auto basis = face_basis(w, p, x);
      const double wq = rule.weights[q] * w.volume;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 4; ++j) local[i][j] += wq * dot(m * basis[j], curls[i]);
      }
    }
    for (int i = 0; i < 6; ++i) {
      const Index slot = complex.interior_edge_slot(edges[i]);
      if (slot == kNoIndex) continue;
      for (int j = 0; j < 4; ++j) t.push_back({slot, faces[j], local[i][j]});
    }
  }
  return CsrMatrix::from_triplets(complex.num_interior_edges(), complex.num_faces(), std::move(t));
}

CsrMatrix assemble_curl_curl(const DeRhamComplex& complex, const TensorField& weight) {
  const CsrMatrix& ci = complex.curl_interior();
  return multiply(transpose(ci), multiply(assemble_mass_rt(complex, weight), ci));
}

namespace {

template <typename Integrand>
Vector edge_rhs(const DeRhamComplex& complex, int quad_degree, Integrand&& integrand) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  Vector out(complex.num_interior_edges(), 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const WhitneyCell& w = complex.whitney(c);
    const auto p = mesh.cell_points(c);
    const auto& edges = mesh.cell_edges(c);
    std::array<double, 6> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const double wq = rule.weights[q] * w.volume;
      integrand(w, l, physical_point(p, l), wq, local);
    }
    for (int le = 0; le < 6; ++le) {
      const Index slot = complex.interior_edge_slot(edges[le]);
      if (slot != kNoIndex) out[slot] += local[le];
    }
  }
  return out;
}

void require_finite(const Vec3& v, const char* what) {
  if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
    throw DataError(std::string(what) + ": non-finite value at a quadrature point");
  }
}

}  // namespace

Vector assemble_rhs_nedelec(const DeRhamComplex& complex, const VectorField& u, int quad_degree) {
  return edge_rhs(complex, quad_degree,
                  [&](const WhitneyCell& w, const std::array<double, 4>& l, const Vec3& x, double wq, auto& local) {
                    const Vec3 v = u(x);
                    require_finite(v, "field");
                    const auto basis = edge_basis(w, l);
                    for (int i = 0; i < 6; ++i) local[i] += wq * dot(v, basis[i]);
                  });
}

Vector assemble_rhs_nedelec_curl(const DeRhamComplex& complex, const VectorField& curl_u, int quad_degree) {
  return edge_rhs(complex, quad_degree,
                  [&](const WhitneyCell& w, const std::array<double, 4>&, const Vec3& x, double wq, auto& local) {
                    const Vec3 v = curl_u(x);
                    require_finite(v, "curl field");
                    const auto curls = edge_curls(w);
                    for (int i = 0; i < 6; ++i) local[i] += wq * dot(v, curls[i]);
                  });
}

Vector assemble_load(const DeRhamComplex& complex, const SourceField& f, double t, int quad_degree) {
  if (!std::isfinite(t)) throw InvalidArgument("assemble_load: non-finite time");
  return edge_rhs(complex, quad_degree,
                  [&](const WhitneyCell& w, const std::array<double, 4>& l, const Vec3& x, double wq, auto& local) {
                    const Vec3 v = f(x, t);
                    require_finite(v, "source");
                    const auto basis = edge_basis(w, l);
                    for (int i = 0; i < 6; ++i) local[i] += wq * dot(v, basis[i]);
                  });
}

Vector assemble_rhs_rt(const DeRhamComplex& complex, const VectorField& u, int quad_degree) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  Vector out(complex.num_faces(), 0.0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const WhitneyCell& w = complex.whitney(c);
    const auto p = mesh.cell_points(c);
    const auto& faces = mesh.cell_faces(c);
    std::array<double, 4> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 x = physical_point(p, rule.points[q]);
      const Vec3 v = u(x);
      require_finite(v, "field");
      const auto basis = face_basis(w, p, x);
      const double wq = rule.weights[q] * w.volume;
      for (int i = 0; i < 4; ++i) local[i] += wq * dot(v, basis[i]);
    }
    for (int i = 0; i < 4; ++i) out[faces[i]] += local[i];
  }
  return out;
}

double l2_error_field(const DeRhamComplex& complex, std::span<const double> coefficients, Space space,
                      const VectorField& exact, int quad_degree) {
  if (quad_degree < 2) throw InvalidArgument("l2_error_field: quadrature degree must be >= 2");
  const std::size_t expected =
      space == Space::Nedelec ? complex.num_interior_edges() : complex.num_faces();
  if (coefficients.size() != expected) throw DimensionMismatch("l2_error_field: coefficient count mismatch");
  const QuadratureRule& rule = tet_quadrature(quad_degree);
  const TetMesh& mesh = complex.mesh();
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto p = mesh.cell_points(c);
    const double vol = complex.whitney(c).volume;
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 x = physical_point(p, rule.points[q]);
      const Vec3 uh = space == Space::Nedelec ? eval_nedelec(complex, coefficients, c, x)
                                              : eval_rt(complex, coefficients, c, x);
      const Vec3 d = uh - exact(x);
      cell_sum += rule.weights[q] * dot(d, d);
    }
    sum += vol * cell_sum;
  }
  return std::sqrt(sum);
}

double l2_error_curl(const DeRhamComplex& complex, std::span<const double> coefficients,
                     const VectorField& exact_curl, int quad_degree) {
  if (quad_degree < 2) throw InvalidArgument("l2_error_curl: quadrature degree must be >= 2");
  if (coefficients.size() != complex.num_interior_edges()) {
    throw DimensionMismatch("l2_error_curl: coefficient count mismatch");
  }
  const QuadratureRule& rule = tet_quadrature(quad_degree);
  const TetMesh& mesh = complex.mesh();
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto p = mesh.cell_points(c);
    const Vec3 ch = eval_nedelec_curl(complex, coefficients, c);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 d = ch - exact_curl(physical_point(p, rule.points[q]));
      cell_sum += rule.weights[q] * dot(d, d);
    }
    sum += complex.whitney(c).volume * cell_sum;
  }
  return std::sqrt(sum);
}

double l2_norm_field(const DeRhamComplex& complex, const VectorField& u, int quad_degree) {
  const QuadratureRule& rule = tet_quadrature(std::max(quad_degree, 2));
  const TetMesh& mesh = complex.mesh();
  double sum = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto p = mesh.cell_points(c);
    double cell_sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 v = u(physical_point(p, rule.points[q]));
      cell_sum += rule.weights[q] * dot(v, v);
    }
    sum += complex.whitney(c).volume * cell_sum;
  }
  return std::sqrt(sum);
}

}  // namespace maxwell
