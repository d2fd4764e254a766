#include "doctest.h"

#include <cmath>
#include <numbers>

#include "maxwell/error.hpp"
#include "maxwell/experiments.hpp"
#include "maxwell/projections.hpp"

using namespace maxwell;
using std::numbers::pi;

namespace {

const VectorField kZero = [](const Vec3&) { return Vec3{}; };

double norm_rt(const DeRhamComplex& c, const Vector& x) { return l2_error_field(c, x, Space::RaviartThomas, kZero); }
double norm_n(const DeRhamComplex& c, const Vector& x) { return l2_error_field(c, x, Space::Nedelec, kZero); }
double hcurl_n(const DeRhamComplex& c, const Vector& x) {
  const double a = norm_n(c, x), b = l2_error_curl(c, x, kZero);
  return std::sqrt(a * a + b * b);
}

// Smooth field with vanishing tangential trace on the unit cube, and its curl.
Vec3 u_tan0(const Vec3& x) {
  return {std::sin(pi * x.y) * std::sin(pi * x.z), 0.0, std::sin(pi * x.x) * std::sin(pi * x.y)};
}
Vec3 curl_u_tan0(const Vec3& x) {
  // u = (s_y s_z, 0, s_x s_y): curl = (d_y u_z, d_z u_x - d_x u_z, -d_y u_x)
  return {pi * std::sin(pi * x.x) * std::cos(pi * x.y),
          pi * std::sin(pi * x.y) * std::cos(pi * x.z) - pi * std::cos(pi * x.x) * std::sin(pi * x.y),
          -pi * std::cos(pi * x.y) * std::sin(pi * x.z)};
}

double diff(const Vector& a, const Vector& b) {
  Vector d = a;
  axpy(-1.0, b, d);
  return max_abs(d);
}

}  // namespace

TEST_CASE("L2 projection onto RT reproduces constants") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  const VectorField u = [](const Vec3&) { return Vec3{1, 2, 3}; };
  const ProjectionReport r = l2_project_rt(c, u);
  CHECK(*r.l2_error <= 1e-12);
  const VectorField uh = discrete_field(c, r.coefficients, Space::RaviartThomas);
  for (const Vec3& p : {Vec3{0.1, 0.2, 0.3}, Vec3{0.9, 0.5, 0.77}}) CHECK(norm(uh(p) - u(p)) <= 1e-12);
  CHECK(r.div_residual <= 1e-12);
}

TEST_CASE("L2 projections are idempotent, contractive and orthogonal") {
  const DeRhamComplex c = build_complex(generate_box_mesh(3));
  // Coefficient reproduction is measured at 1e-12, so solve well below that.
  ProjectionOptions tight;
  tight.tol = 1e-14;
  const Vector beta = random_vector(c.num_faces(), 1);
  const ProjectionReport r = l2_project_rt(c, discrete_field(c, beta, Space::RaviartThomas), tight);
  CHECK(diff(r.coefficients, beta) <= 1e-12);

  const Vector alpha = random_vector(c.num_interior_edges(), 2);
  const ProjectionReport rn = l2_project_nedelec(c, discrete_field(c, alpha, Space::Nedelec), tight);
  CHECK(diff(rn.coefficients, alpha) <= 1e-12);

  const VectorField u = [](const Vec3& x) { return Vec3{std::exp(x.x) * x.y, std::sin(3 * x.z), x.x * x.y * x.z}; };
  const double nu = l2_norm_field(c, u);
  const ProjectionReport p = l2_project_rt(c, u, tight);
  const double np = norm_rt(c, p.coefficients);
  CHECK(np <= nu * (1 + 1e-10));
  CHECK(std::abs(nu * nu - (*p.l2_error * *p.l2_error + np * np)) <= 1e-10 * nu * nu);

  const ProjectionReport q = l2_project_nedelec(c, u);
  const double nq = norm_n(c, q.coefficients);
  CHECK(nq <= nu * (1 + 1e-10));
  CHECK(std::abs(nu * nu - (*q.l2_error * *q.l2_error + nq * nq)) <= 1e-10 * nu * nu);

  // Re-projecting a projection returns the same coefficients.
  const ProjectionReport pp = l2_project_rt(c, discrete_field(c, p.coefficients, Space::RaviartThomas), tight);
  CHECK(diff(pp.coefficients, p.coefficients) <= 1e-12);
}

TEST_CASE("projection errors decrease under refinement") {
  const VectorField u = [](const Vec3& x) { return Vec3{std::sin(pi * x.x), 0, 0}; };
  double prev_rt = INFINITY, prev_n = INFINITY, prev_r = INFINITY;
  for (std::size_t n : {2u, 4u, 8u}) {
    const DeRhamComplex c = build_complex(generate_box_mesh(n));
    const double e_rt = *l2_project_rt(c, u).l2_error;
    const double e_n = *l2_project_nedelec(c, u_tan0).l2_error;
    const double e_r = *riesz_project_nedelec(c, u_tan0, curl_u_tan0).hcurl_error;
    CHECK(e_rt < prev_rt);
    CHECK(e_n < prev_n);
    CHECK(e_r < prev_r);
    prev_rt = e_rt, prev_n = e_n, prev_r = e_r;
  }
}

TEST_CASE("Nedelec projection on a mesh without interior edges") {
  const DeRhamComplex c = build_complex(TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}));
  const VectorField u = [](const Vec3& x) { return Vec3{x.y, 1, 0}; };
  const ProjectionReport r = l2_project_nedelec(c, u);
  CHECK(r.coefficients.empty());
  CHECK(*r.l2_error == doctest::Approx(l2_norm_field(c, u)).epsilon(1e-14));
}

TEST_CASE("Riesz projection") {
  const DeRhamComplex c = build_complex(generate_box_mesh(3));
  const Vector alpha = random_vector(c.num_interior_edges(), 3);
  const ProjectionReport r =
      riesz_project_nedelec(c, discrete_field(c, alpha, Space::Nedelec), discrete_curl_field(c, alpha), {.tol = 1e-14});
  CHECK(diff(r.coefficients, alpha) <= 1e-11);

  CHECK(max_abs(riesz_project_nedelec(c, kZero, kZero).coefficients) == 0.0);

  const ProjectionReport s = riesz_project_nedelec(c, u_tan0, curl_u_tan0);
  const double nu = std::sqrt(std::pow(l2_norm_field(c, u_tan0), 2) + std::pow(l2_norm_field(c, curl_u_tan0), 2));
  CHECK(hcurl_n(c, s.coefficients) <= nu * (1 + 1e-10));

  // Galerkin orthogonality a(u - R_h u, v_h) = 0 for sampled v_h.
  const CsrMatrix a = add(1.0, assemble_mass_nedelec(c, TensorField::identity()), 1.0,
                          assemble_curl_curl(c, TensorField::identity()));
  Vector rhs = assemble_rhs_nedelec(c, u_tan0, 4);
  axpy(1.0, assemble_rhs_nedelec_curl(c, curl_u_tan0, 4), rhs);
  Vector res = rhs;
  axpy(-1.0, spmv(a, s.coefficients), res);
  for (int k = 0; k < 5; ++k) {
    const Vector v = random_vector(c.num_interior_edges(), 40 + k);
    CHECK(std::abs(dot(res, v)) <= 1e-11 * norm2(rhs) * norm2(v));
  }
}

TEST_CASE("constrained projection") {
  const DeRhamComplex c = build_complex(generate_box_mesh(3));
  const VectorField b0 = [](const Vec3& x) { return Vec3{x.x * x.x, std::sin(x.y + x.z), x.x * x.z}; };
  const ProjectionReport r = constrained_project_rt(c, b0);
  CHECK(r.div_residual <= 1e-10);
  CHECK(max_abs(spmv(c.div(), r.coefficients)) <= 1e-10);
  CHECK(r.multiplier.size() == c.num_cells());

  // Minimizer: no member of Z_h near B_h is closer to B0.
  const double best = *r.l2_error;
  for (int s = 0; s < 20; ++s) {
    Vector z = r.coefficients;
    axpy(0.05, spmv(c.curl_interior(), random_vector(c.num_interior_edges(), 500 + s)), z);
    CHECK(best <= l2_error_field(c, z, Space::RaviartThomas, b0) * (1 + 1e-12));
  }

  // A field already in Z_h is reproduced with zero multiplier.
  const Vector z = spmv(c.curl_interior(), random_vector(c.num_interior_edges(), 9));
  const ProjectionReport rz = constrained_project_rt(c, discrete_field(c, z, Space::RaviartThomas));
  CHECK(diff(rz.coefficients, z) <= 1e-10);
  CHECK(max_abs(rz.multiplier) <= 1e-10);
}

TEST_CASE("both B initializations converge for the shifted cavity data") {
  const double t0 = cavity::kShiftedStart;
  const VectorField a0 = [&](const Vec3& x) { return cavity::a(x, t0); };
  const VectorField b0 = [&](const Vec3& x) { return cavity::b(x, t0); };
  double prev_c = INFINITY, prev_p = INFINITY, prev_h = INFINITY;
  for (std::size_t n : {2u, 4u, 8u}) {
    const DeRhamComplex c = build_complex(generate_box_mesh(n));
    const ProjectionReport rc = constrained_project_rt(c, b0);
    const ProjectionReport rp = potential_init_rt(c, a0, b0, b0);
    CHECK(rp.div_residual == 0.0);
    CHECK(max_abs(spmv(c.div(), rp.coefficients)) == 0.0);
    CHECK(*rp.l2_error <= *rp.hcurl_error);
    CHECK(*rc.l2_error < prev_c);
    CHECK(*rp.l2_error < prev_p);
    CHECK(*rp.hcurl_error < prev_h);
    prev_c = *rc.l2_error, prev_p = *rp.l2_error, prev_h = *rp.hcurl_error;
  }
}

TEST_CASE("potential init of zero") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  const ProjectionReport r = potential_init_rt(c, kZero, kZero);
  CHECK(max_abs(r.coefficients) == 0.0);
}

TEST_CASE("dyadic snapping") {
  const Vector v{0.1, -0.3, 1e-20, 0.0};
  const Vector s = snap_to_dyadic_grid(v);
  CHECK(std::abs(s[0] - 0.1) <= 0.3 * std::ldexp(1.0, -44));
  CHECK(s[2] == 0.0);
  CHECK(snap_to_dyadic_grid(Vector{0, 0}) == Vector{0, 0});
}

TEST_CASE("point location") {
  const DeRhamComplex c = build_complex(generate_box_mesh(3));
  const PointLocator loc(c);
  for (const Vec3& p : {Vec3{0.5, 0.5, 0.5}, Vec3{0, 0, 0}, Vec3{1, 1, 1}, Vec3{0.99, 0.01, 0.4}}) {
    const auto l = barycentric(c, loc.find(p), p);
    for (double v : l) CHECK(v >= -1e-12);
  }
  CHECK_THROWS_AS(loc.find({1.5, 0.5, 0.5}), InvalidArgument);
  CHECK_THROWS_AS(discrete_field(c, Vector(3, 0.0), Space::Nedelec), DimensionMismatch);
}
