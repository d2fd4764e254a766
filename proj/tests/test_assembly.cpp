#include "doctest.h"

#include <cmath>
#include <numbers>

#include "maxwell/assembly.hpp"
#include "maxwell/error.hpp"
#include "maxwell/experiments.hpp"
#include "maxwell/quadrature.hpp"

using namespace maxwell;

namespace {

TetMesh ref_tet() { return TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}); }
TetMesh regular_tet() {
  return TetMesh({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}, {{0, 1, 2, 3}});
}

double max_diff(const CsrMatrix& a, const CsrMatrix& b) { return max_abs(add(1.0, a, -1.0, b)); }

Mat3 spd_sample(double shift) {
  Mat3 m;
  m(0, 0) = 2 + shift, m(1, 1) = 3 + shift, m(2, 2) = 1.5 + shift;
  m(0, 1) = m(1, 0) = 0.4;
  m(0, 2) = m(2, 0) = -0.3;
  m(1, 2) = m(2, 1) = 0.2;
  return m;
}

double rayleigh_min(const CsrMatrix& m, std::uint64_t seed, int samples) {
  double lo = INFINITY;
  for (int s = 0; s < samples; ++s) {
    const Vector x = random_vector(m.rows(), seed + s);
    lo = std::min(lo, dot(x, spmv(m, x)) / dot(x, x));
  }
  return lo;
}

}  // namespace

TEST_CASE("quadrature rules are exact to their degree") {
  for (int d : {0, 1, 2, 3, 4, 5}) {
    const QuadratureRule& q = tet_quadrature(d);
    CHECK(q.degree >= d);
    double sum = 0.0;
    for (double w : q.weights) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-15);
    CHECK(quadrature_exactness_error(q) <= 1e-14);
  }
  CHECK(tet_quadrature(2).points.size() == 4);
  CHECK(tet_quadrature(4).points.size() == 14);
  CHECK_THROWS_AS(tet_quadrature(6), InvalidArgument);
  CHECK_THROWS_AS(tet_quadrature(-1), InvalidArgument);
}

TEST_CASE("tensor admissibility") {
  CHECK(min_eigenvalue(Mat3::identity(2.0)) == doctest::Approx(2.0));
  CHECK(min_eigenvalue(spd_sample(0.0)) > 0.0);
  Mat3 asym = Mat3::identity();
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(check_tensor(asym, Definiteness::Positive, "eps"), DataError);
  CHECK_THROWS_AS(check_tensor(Mat3::identity(-1.0), Definiteness::Positive, "eps"), DataError);
  CHECK_THROWS_AS(check_tensor(Mat3::identity(0.0), Definiteness::Positive, "eps"), DataError);
  CHECK_NOTHROW(check_tensor(Mat3::identity(0.0), Definiteness::Semidefinite, "sigma"));
  CHECK_THROWS_AS(check_tensor(Mat3::identity(-1e-6), Definiteness::Semidefinite, "sigma"), DataError);

  const DeRhamComplex c = build_complex(generate_box_mesh(1));
  CHECK_THROWS_AS(assemble_mass_nedelec(c, TensorField::scalar(-1.0)), DataError);
  CHECK_THROWS_AS(assemble_mass_sigma(c, TensorField::scalar(-1.0)), DataError);
  CHECK_THROWS_AS(assemble_mass_rt(c, TensorField::per_cell(std::vector<Mat3>(2, Mat3::identity()))),
                  InvalidArgument);
}

TEST_CASE("single tet has empty edge blocks") {
  const DeRhamComplex c = build_complex(ref_tet());
  const CsrMatrix me = assemble_mass_nedelec(c, TensorField::identity());
  CHECK(me.rows() == 0);
  CHECK(me.cols() == 0);
  const CsrMatrix cpl = assemble_curl_coupling(c, TensorField::identity());
  CHECK(cpl.rows() == 0);
  CHECK(cpl.cols() == 4);
}

TEST_CASE("Nedelec mass matrix is SPD and bilinear in eps") {
  const DeRhamComplex c = build_complex(generate_box_mesh(1));
  const CsrMatrix m = assemble_mass_nedelec(c, TensorField::identity());
  CHECK(m.rows() == c.num_interior_edges());
  CHECK(is_symmetric(m, 1e-14));
  CHECK(rayleigh_min(m, 100, 50) > 0.0);
  CHECK_NOTHROW(cg_solve(m, random_vector(m.rows(), 1)));
  const CsrMatrix m2 = assemble_mass_nedelec(c, TensorField::scalar(2.0));
  CHECK(max_diff(m2, scale(m, 2.0)) == 0.0);
}

TEST_CASE("RT mass matrix on a single tet") {
  const DeRhamComplex reg = build_complex(regular_tet());
  const CsrMatrix m = assemble_mass_rt(reg, TensorField::identity());
  CHECK(m.rows() == 4);
  CHECK(is_symmetric(m, 1e-14));
  for (int i = 1; i < 4; ++i) CHECK(std::abs(m.at(i, i) - m.at(0, 0)) <= 1e-13 * m.at(0, 0));
  CHECK(max_diff(m, assemble_mass_rt(reg, TensorField::identity(), 4)) <= 1e-13);

  // On the reference tet only the three faces through the origin are congruent.
  const DeRhamComplex ref = build_complex(ref_tet());
  const CsrMatrix mr = assemble_mass_rt(ref, TensorField::identity());
  const auto& faces = ref.mesh().faces();
  std::vector<double> through_origin;
  for (std::size_t f = 0; f < 4; ++f) {
    if (faces[f][0] == 0) through_origin.push_back(mr.at(f, f));
  }
  REQUIRE(through_origin.size() == 3);
  CHECK(std::abs(through_origin[1] - through_origin[0]) <= 1e-13);
  CHECK(std::abs(through_origin[2] - through_origin[0]) <= 1e-13);

  CHECK(max_diff(assemble_mass_rt(ref, TensorField::scalar(3.0)), scale(mr, 3.0)) <= 1e-15);
}

TEST_CASE("RT mass times interpolant of a constant reproduces the pairings") {
  for (std::size_t n : {1u, 2u}) {
    const DeRhamComplex c = build_complex(generate_box_mesh(n));
    const TetMesh& mesh = c.mesh();
    const Vec3 u{1, 0, 0};
    Vector coeffs(c.num_faces());
    for (std::size_t f = 0; f < c.num_faces(); ++f) {
      const Face fv = mesh.faces()[f];
      const Vec3 a = mesh.vertices()[fv[0]];
      coeffs[f] = 0.5 * dot(cross(mesh.vertices()[fv[1]] - a, mesh.vertices()[fv[2]] - a), u);
    }
    const Vector lhs = spmv(assemble_mass_rt(c, TensorField::identity()), coeffs);
    const Vector rhs = assemble_rhs_rt(c, [&](const Vec3&) { return u; }, 4);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) <= 1e-13);
    CHECK(l2_error_field(c, coeffs, Space::RaviartThomas, [&](const Vec3&) { return u; }) <= 1e-13);
  }
}

TEST_CASE("sigma mass matrix") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  CHECK(max_abs(assemble_mass_sigma(c, TensorField::scalar(0.0))) == 0.0);
  CHECK(max_diff(assemble_mass_sigma(c, TensorField::identity()),
                 assemble_mass_nedelec(c, TensorField::identity())) == 0.0);
  Mat3 psd{};
  psd(0, 0) = 1.0;  // semidefinite
  const CsrMatrix k = assemble_mass_sigma(c, TensorField::constant(psd));
  for (int s = 0; s < 20; ++s) {
    const Vector x = random_vector(k.rows(), 300 + s);
    CHECK(dot(x, spmv(k, x)) >= -1e-12 * dot(x, x));
  }
}

TEST_CASE("coupling: product path equals direct quadrature") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  for (const TensorField& mu : {TensorField::identity(), TensorField::constant(spd_sample(0.5)),
                                TensorField::analytic([](const Vec3& x) { return Mat3::identity(1.0 + x.x * x.y); })}) {
    const CsrMatrix p = assemble_curl_coupling(c, mu);
    const CsrMatrix q = assemble_curl_coupling_quadrature(c, mu);
    CHECK(p.rows() == c.num_interior_edges());
    CHECK(p.cols() == c.num_faces());
    CHECK(max_diff(p, q) <= 1e-12);
  }
}

TEST_CASE("coupling annihilates discrete gradients") {
  const DeRhamComplex c = build_complex(generate_box_mesh(3));
  Vector q = random_vector(c.num_vertices(), 77);
  for (Index v : c.boundary_vertices()) q[v] = 0.0;
  const Vector alpha = c.restrict_interior(spmv(c.grad(), q));
  // Boundary edges of a gradient with zero boundary values vanish.
  CHECK(max_abs(c.expand_interior(alpha)) == doctest::Approx(max_abs(spmv(c.grad(), q))));
  const CsrMatrix cpl = assemble_curl_coupling(c, TensorField::identity());
  CHECK(max_abs(spmv(transpose(cpl), alpha)) <= 1e-13);
}

TEST_CASE("degree-2 assembly matches the degree-4 oracle for constant coefficients") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  const TensorField t = TensorField::constant(spd_sample(0.1));
  CHECK(max_diff(assemble_mass_nedelec(c, t), assemble_mass_nedelec(c, t, 4)) <= 1e-12);
  CHECK(max_diff(assemble_mass_rt(c, t), assemble_mass_rt(c, t, 4)) <= 1e-12);
  CHECK(max_diff(assemble_mass_sigma(c, t), assemble_mass_sigma(c, t, 4)) <= 1e-12);
  std::vector<Mat3> per_cell;
  for (std::size_t k = 0; k < c.num_cells(); ++k) per_cell.push_back(spd_sample(0.01 * static_cast<double>(k)));
  const TensorField pc = TensorField::per_cell(per_cell);
  CHECK(max_diff(assemble_mass_rt(c, pc), assemble_mass_rt(c, pc, 4)) <= 1e-12);
}

TEST_CASE("load vectors") {
  const DeRhamComplex c = build_complex(generate_box_mesh(1));
  CHECK(max_abs(assemble_load(c, [](const Vec3&, double) { return Vec3{}; }, 0.3)) == 0.0);

  const Vec3 k{0.3, -1.2, 2.0};
  const Vector f = assemble_load(c, [&](const Vec3&, double) { return k; }, 0.0);
  const Vector oracle = assemble_rhs_nedelec(c, [&](const Vec3&) { return k; }, 4);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(f[i] - oracle[i]) <= 1e-14);

  const SourceField f1 = [](const Vec3& x, double t) { return Vec3{x.y * t, 1.0, x.z * x.x}; };
  const SourceField f2 = [](const Vec3& x, double) { return Vec3{std::sin(x.x), x.y, 0.0}; };
  const Vector l1 = assemble_load(c, f1, 0.7), l2 = assemble_load(c, f2, 0.7);
  const Vector l12 = assemble_load(c, [&](const Vec3& x, double t) { return f1(x, t) + f2(x, t); }, 0.7);
  for (std::size_t i = 0; i < l12.size(); ++i) CHECK(std::abs(l12[i] - (l1[i] + l2[i])) <= 1e-14);

  CHECK_THROWS_AS(assemble_load(c, [](const Vec3&, double) { return Vec3{NAN, 0, 0}; }, 0.0), DataError);
}

TEST_CASE("L2 error norms") {
  const DeRhamComplex c = build_complex(generate_box_mesh(2));
  const Vector zero_e(c.num_interior_edges(), 0.0), zero_b(c.num_faces(), 0.0);
  const VectorField zero = [](const Vec3&) { return Vec3{}; };
  const VectorField ex = [](const Vec3&) { return Vec3{1, 0, 0}; };
  CHECK(l2_error_field(c, zero_e, Space::Nedelec, zero) == 0.0);
  CHECK(l2_error_field(c, zero_b, Space::RaviartThomas, ex) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(l2_norm_field(c, ex) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(l2_error_field(c, zero_b, Space::Nedelec, zero), DimensionMismatch);
}
