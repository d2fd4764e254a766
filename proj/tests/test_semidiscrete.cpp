#include "doctest.h"

#include <cmath>

#include "maxwell/error.hpp"
#include "maxwell/experiments.hpp"
#include "maxwell/semidiscrete.hpp"

using namespace maxwell;

namespace {

// a' = b, b' = -a: one edge coupled to one face with unit masses.
SystemMatrices rotation_system(double sigma = 0.0) {
  SystemMatrices s;
  s.mass_e = CsrMatrix::identity(1);
  s.sigma_e = CsrMatrix::diagonal(Vector{sigma});
  s.mass_b = CsrMatrix::identity(1);
  s.curl = CsrMatrix::identity(1);
  s.coupling = multiply(transpose(s.curl), s.mass_b);
  s.curl_curl = multiply(s.coupling, s.curl);
  s.div = CsrMatrix::zero(1, 1);
  return s;
}

struct Cavity {
  std::shared_ptr<const DeRhamComplex> complex;
  SystemMatrices sys;
};

Cavity cavity_system(std::size_t n, const TensorField& sigma = TensorField::scalar(0.0)) {
  Cavity c;
  c.complex = std::make_shared<const DeRhamComplex>(build_complex(generate_box_mesh(n)));
  c.sys = build_system(*c.complex, TensorField::identity(), TensorField::identity(), sigma);
  return c;
}

}  // namespace

TEST_CASE("Crank-Nicolson is the Cayley transform on a 2-DOF rotation") {
  const SystemMatrices s = rotation_system();
  const double dt = 0.3, h = dt / 2;
  SimState x{0.0, {0.6}, {-0.8}};
  const auto [y, rec] = step_crank_nicolson(s, x, dt, {});
  const double d = 1 + h * h;
  CHECK(y.alpha[0] == doctest::Approx(((1 - h * h) * 0.6 + 2 * h * -0.8) / d).epsilon(1e-13));
  CHECK(y.beta[0] == doctest::Approx((-2 * h * 0.6 + (1 - h * h) * -0.8) / d).epsilon(1e-13));
  CHECK(std::abs(rec.energy - 0.5) <= 1e-14);
  CHECK(rec.energy_identity_residual <= 1e-14);
  CHECK(y.t == dt);

  SimState z = x;
  for (int k = 0; k < 1000; ++k) z = step_crank_nicolson(s, z, dt, {}).first;
  CHECK(std::abs(energy(s, z) - 0.5) <= 1e-12 * 0.5);
}

TEST_CASE("backward Euler dissipates on the rotation and its energy defect is first order") {
  const SystemMatrices s = rotation_system();
  auto defect = [&](double dt) {
    SimState x{0.0, {1.0}, {0.0}};
    const std::vector<StepRecord> r = run(s, x, 1.0, dt, {}, Stepper::BackwardEuler);
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].energy <= r[i - 1].energy);
    return r.front().energy - r.back().energy;
  };
  const double ratio = defect(1.0 / 64) / defect(1.0 / 128);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("energy is a quadratic form") {
  const Cavity c = cavity_system(2);
  const SimState zero{0.0, Vector(c.sys.num_e(), 0.0), Vector(c.sys.num_b(), 0.0)};
  CHECK(energy(c.sys, zero) == 0.0);
  SimState x{0.0, random_vector(c.sys.num_e(), 1), random_vector(c.sys.num_b(), 2)};
  SimState x2 = x;
  for (double& v : x2.alpha) v *= 2;
  for (double& v : x2.beta) v *= 2;
  CHECK(energy(c.sys, x2) == doctest::Approx(4 * energy(c.sys, x)).epsilon(1e-14));

  const SystemMatrices s2 =
      build_system(*c.complex, TensorField::scalar(2.0), TensorField::identity(), TensorField::scalar(0.0));
  SimState e_only{0.0, x.alpha, Vector(c.sys.num_b(), 0.0)};
  CHECK(energy(s2, e_only) == doctest::Approx(2 * energy(c.sys, e_only)).epsilon(1e-14));
}

TEST_CASE("system blocks") {
  const DeRhamComplex tet = build_complex(TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 1, 2, 3}}));
  const SystemMatrices s = build_system(tet, TensorField::identity(), TensorField::identity(), TensorField::scalar(0.0));
  CHECK(s.num_e() == 0);
  CHECK(s.num_b() == 4);

  const Cavity c = cavity_system(2);
  CHECK(max_abs(c.sys.sigma_e) == 0.0);
  CHECK(max_abs(add(1.0, c.sys.coupling, -1.0,
                    assemble_curl_coupling_quadrature(*c.complex, TensorField::identity()))) <= 1e-12);

  // Skew cross terms: a^T Cpl b = b^T M_B C a.
  const Vector a = random_vector(c.sys.num_e(), 3), b = random_vector(c.sys.num_b(), 4);
  const double lhs = dot(a, spmv(c.sys.coupling, b));
  const double rhs = dot(b, spmv(c.sys.mass_b, spmv(c.sys.curl, a)));
  CHECK(std::abs(lhs - rhs) <= 1e-13 * (1 + std::abs(lhs)));
}

TEST_CASE("step argument validation") {
  const SystemMatrices s = rotation_system();
  const SimState x{0.0, {1.0}, {0.0}};
  CHECK_THROWS_AS(step_crank_nicolson(s, x, 0.0, {}), InvalidArgument);
  CHECK_THROWS_AS(step_backward_euler(s, x, -1.0, {}), InvalidArgument);
  CHECK_THROWS_AS(step_crank_nicolson(s, SimState{0.0, {1.0, 2.0}, {0.0}}, 0.1, {}), DimensionMismatch);
  CHECK_THROWS_AS(step_crank_nicolson(s, x, 0.1, [](const Vec3&, double) { return Vec3{}; }), InvalidArgument);
  CHECK(step_count(1.0, 1.0 / 64) == 64);
  CHECK(step_count(0.25, 0.25 / 3) == 3);
  CHECK_THROWS_AS(step_count(1.0, 0.3), InvalidArgument);
  CHECK_THROWS_AS(step_count(0.0, 0.1), InvalidArgument);
}

TEST_CASE("initial states") {
  const Cavity c = cavity_system(2);
  const SimState z = initial_state(*c.complex, c.sys, InitialData{}, BInit::Potential);
  CHECK(max_abs(z.alpha) == 0.0);
  CHECK(max_abs(z.beta) == 0.0);
  const SimState z2 = initial_state(*c.complex, c.sys, InitialData{}, BInit::Constrained);
  CHECK(max_abs(z2.beta) == 0.0);

  const SimState s0 = initial_state(*c.complex, c.sys, cavity::initial_data(0.0), BInit::Potential);
  CHECK(gauss_residual(c.sys, s0.beta) == 0.0);
  CHECK(max_abs(s0.beta) == 0.0);
  CHECK(max_abs(s0.alpha) > 0.0);

  InitialData half = cavity::initial_data(cavity::kShiftedStart);
  half.curl_a0 = {};
  CHECK_THROWS_AS(initial_state(*c.complex, c.sys, half, BInit::Potential), InvalidArgument);

  double prev = INFINITY;
  for (std::size_t n : {2u, 4u, 8u}) {
    const Cavity cn = cavity_system(n);
    const InitialData d = cavity::initial_data(cavity::kShiftedStart);
    const SimState s = initial_state(*cn.complex, cn.sys, d, BInit::Constrained);
    const double err = l2_error_field(*cn.complex, s.alpha, Space::Nedelec, d.e0);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("cavity run conserves energy and the Gauss law") {
  const Cavity c = cavity_system(2);
  const InitialData d = cavity::initial_data(cavity::kShiftedStart);
  for (BInit mode : {BInit::Potential, BInit::Constrained}) {
    const SimState s0 = initial_state(*c.complex, c.sys, d, mode);
    const std::vector<StepRecord> r = run(c.sys, s0, 1.0, 1.0 / 64, {}, Stepper::CrankNicolson);
    REQUIRE(r.size() == 65);
    CHECK(r.back().t == doctest::Approx(s0.t + 1.0).epsilon(1e-15));
    double drift = 0.0, gauss = 0.0, step_drift = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      drift = std::max(drift, std::abs(r[i].energy - r[0].energy) / r[0].energy);
      gauss = std::max(gauss, r[i].gauss_residual);
      if (i > 0) step_drift = std::max(step_drift, std::abs(r[i].gauss_residual - r[i - 1].gauss_residual));
    }
    CHECK(drift <= 1e-10);
    CHECK(step_drift <= 1e-12);
    if (mode == BInit::Potential) CHECK(gauss == 0.0);
    else CHECK(gauss <= 1e-10);
  }
}

TEST_CASE("damped and forced runs") {
  const Cavity c = cavity_system(2, TensorField::identity());
  const InitialData d = cavity::initial_data(cavity::kShiftedStart);
  const SimState s0 = initial_state(*c.complex, c.sys, d, BInit::Potential);

  for (Stepper st : {Stepper::CrankNicolson, Stepper::BackwardEuler}) {
    const std::vector<StepRecord> r = run(c.sys, s0, 0.5, 1.0 / 64, {}, st);
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].energy <= r[i - 1].energy + 1e-12 * r[0].energy);
  }

  const SourceField f = cavity::consistent_source(TensorField::identity());
  const TimeStepper ts(c.sys, 1.0 / 64, Stepper::CrankNicolson);
  SimState x = s0;
  for (int k = 0; k < 16; ++k) {
    auto [y, rec] = ts.step(x, f);
    CHECK(rec.energy_identity_residual <= 1e-10 * std::max(1.0, rec.energy));
    CHECK(rec.dissipation >= 0.0);
    x = std::move(y);
  }
  const std::vector<StepRecord> r = run(c.sys, s0, 0.25, 1.0 / 64, f, Stepper::CrankNicolson);
  for (const StepRecord& rec : r) CHECK(rec.energy_identity_residual <= 1e-10 * std::max(1.0, r[0].energy));
}

TEST_CASE("a failing step aborts the run with partial records") {
  const Cavity c = cavity_system(2);
  const SimState s0 = initial_state(*c.complex, c.sys, cavity::initial_data(0.0), BInit::Potential);
  const SourceField bad = [](const Vec3&, double t) { return Vec3{t > 0.1 ? NAN : 0.0, 0, 0}; };
  try {
    run(c.sys, s0, 0.5, 1.0 / 32, bad, Stepper::CrankNicolson);
    FAIL("expected the run to abort");
  } catch (const RunAborted& e) {
    CHECK(e.records().size() == 4);  // t = 0 plus three good steps
  }
}

TEST_CASE("observer sees every state and CSV has one row per record") {
  const SystemMatrices s = rotation_system();
  int seen = 0;
  const auto r = run(s, SimState{0.0, {1.0}, {0.0}}, 1.0, 0.25, {}, Stepper::CrankNicolson, 1e-12,
                     [&](const SimState&, const StepRecord&) { ++seen; });
  CHECK(seen == 5);
  const std::string csv = records_to_csv(r);
  CHECK(csv.rfind("t,energy,dissipation,work,gauss_residual,energy_identity_residual\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find("\n0.25,") != std::string::npos);
}
