#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "maxwell/assembly.hpp"
#include "maxwell/semidiscrete.hpp"
#include "maxwell/vec3.hpp"

namespace maxwell {

/// Resonant mode of the unit-cube cavity with eps = mu = 1, sigma = 0, f = 0
/// and perfectly conducting walls:
///   E = (0, 0, sin(pi x) sin(pi y)) cos(w t)
///   B = -(pi / w) (sin(pi x) cos(pi y), -cos(pi x) sin(pi y), 0) sin(w t)
/// with w = sqrt(2) pi. B = curl A for A = (0, 0, -sin(w t)/w sin(pi x) sin(pi y)).
namespace cavity {

inline constexpr double kOmega = std::numbers::sqrt2 * std::numbers::pi;
/// w t0 = pi / 4, where neither field vanishes.
inline constexpr double kShiftedStart = 1.0 / (4.0 * std::numbers::sqrt2);

Vec3 e(const Vec3& x, double t);
Vec3 b(const Vec3& x, double t);
Vec3 a(const Vec3& x, double t);
Vec3 curl_e(const Vec3& x, double t);
Vec3 curl_b(const Vec3& x, double t);
Vec3 dt_e(const Vec3& x, double t);
Vec3 dt_b(const Vec3& x, double t);
double div_b(const Vec3& x, double t);

/// (E, B) at (t, x). Throws InvalidArgument if x lies outside the unit cube.
std::pair<Vec3, Vec3> eval(double t, const Vec3& x);

/// Initial data at t0 for either B initialization.
InitialData initial_data(double t0);

/// f = sigma E, making the cavity mode an exact solution of the damped
/// system. sigma must be constant or analytic.
SourceField consistent_source(const TensorField& sigma);

}  // namespace cavity

/// Uniform doubles in [lo, hi) from a 64-bit Mersenne twister, independent
/// of the standard library's distribution implementation.
Vector random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

struct ConvergenceRow {
  std::size_t n = 0;
  double h = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  double err_e = 0.0;  // max over time levels of ||E_h - E||_{L2}
  double err_b = 0.0;
  double order_e = 0.0;  // log2 ratio against the previous row; NaN on the first
  double order_b = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
};

struct ConvergenceOptions {
  std::vector<std::size_t> levels{2, 4, 8};
  double duration = 0.25;
  /// dt = T / ceil(T / (dt_factor h)), the largest step <= dt_factor h dividing T.
  double dt_factor = 1.0 / 8.0;
  double t0 = 0.0;
  BInit b_init = BInit::Potential;
  Stepper stepper = Stepper::CrankNicolson;
  double solve_tol = 1e-12;
  /// Levels run concurrently on up to this many threads; output order is fixed.
  std::size_t threads = 1;
};

/// Cavity-mode refinement study on the unit cube. With duration 0 only the
/// initialization error is measured.
ConvergenceTable convergence_study(const ConvergenceOptions& opts);

/// `n,h,err_E,err_B,order_E,order_B`, 17 significant digits.
std::string table_to_csv(const ConvergenceTable& table);

struct InvariantCheck {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double tolerance = 0.0;
};

struct InvariantReport {
  std::size_t n = 0;
  std::vector<InvariantCheck> checks;
  bool all_passed() const;
  std::string to_json() const;
};

/// Runs the structural checks (exactness, conformity, mass-matrix properties,
/// projector laws, Gauss law, energy balance) on the unit-cube mesh with n
/// subdivisions; cavity runs integrate for `duration` with step dt.
/// Failures are reported, never thrown.
InvariantReport invariant_suite(std::size_t n, double duration, double dt);

}  // namespace maxwell
