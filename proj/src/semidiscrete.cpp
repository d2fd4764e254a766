#include "maxwell/semidiscrete.hpp"

#include <cmath>
#include <cstdio>

#include "maxwell/error.hpp"
#include "maxwell/projections.hpp"

namespace maxwell {

SystemMatrices build_system(const DeRhamComplex& complex, const TensorField& eps, const TensorField& mu_inv,
                            const TensorField& sigma) {
  SystemMatrices s;
  s.complex = &complex;
  s.mass_e = assemble_mass_nedelec(complex, eps);
  s.sigma_e = assemble_mass_sigma(complex, sigma);
  s.mass_b = assemble_mass_rt(complex, mu_inv);
  s.curl = complex.curl_interior();
  const CsrMatrix curl_t = transpose(s.curl);
  s.coupling = multiply(curl_t, s.mass_b);
  s.curl_curl = multiply(s.coupling, s.curl);
  s.div = complex.div();
  return s;
}

double energy(const SystemMatrices& sys, const SimState& state) {
  const double e = dot(state.alpha, spmv(sys.mass_e, state.alpha));
  const double b = dot(state.beta, spmv(sys.mass_b, state.beta));
  return 0.5 * (e + b);
}

double gauss_residual(const SystemMatrices& sys, std::span<const double> beta) {
  return max_abs(spmv(sys.div, beta));
}

TimeStepper::TimeStepper(const SystemMatrices& sys, double dt, Stepper kind, double solve_tol)
    : sys_(&sys), dt_(dt), kind_(kind), tol_(solve_tol) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive and finite");
  if (!(solve_tol > 0.0)) throw InvalidArgument("solver tolerance must be positive");
  const double theta = kind == Stepper::CrankNicolson ? 0.5 : 1.0;
  op_ = add(1.0, add(1.0, sys.mass_e, theta * dt, sys.sigma_e), theta * theta * dt * dt, sys.curl_curl);
}

Vector TimeStepper::load(const SourceField& f, double t) const {
  if (!f) return Vector(sys_->num_e(), 0.0);
  if (!sys_->complex) throw InvalidArgument("system has no complex to assemble a source against");
  return assemble_load(*sys_->complex, f, t);
}

std::pair<SimState, StepRecord> TimeStepper::step(const SimState& state, const SourceField& f) const {
  const SystemMatrices& s = *sys_;
  if (state.alpha.size() != s.num_e() || state.beta.size() != s.num_b()) {
    throw DimensionMismatch("step: state does not match the system");
  }
  const double t1 = state.t + dt_;
  const bool cn = kind_ == Stepper::CrankNicolson;

  // Source at the evaluation point of the scheme: trapezoidal average for CN,
  // end-of-step value for BE.
  Vector load_eff = load(f, t1);
  if (cn) {
    const Vector f0 = load(f, state.t);
    for (std::size_t i = 0; i < load_eff.size(); ++i) load_eff[i] = 0.5 * (f0[i] + load_eff[i]);
  }

  // CN solves for the midpoint a* = (a0 + a1) / 2, BE for a1; either way the
  // unknown u satisfies op u = M_E a0 + theta dt (F + Cpl b0).
  const double theta_dt = cn ? 0.5 * dt_ : dt_;
  Vector rhs = spmv(s.mass_e, state.alpha);
  Vector forcing = spmv(s.coupling, state.beta);
  axpy(1.0, load_eff, forcing);
  axpy(theta_dt, forcing, rhs);

  CgOptions o;
  o.tol = tol_;
  o.initial_guess = state.alpha;
  const Vector u = cg_solve(op_, rhs, o).x;

  SimState next;
  next.t = t1;
  if (cn) {
    next.alpha.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) next.alpha[i] = 2.0 * u[i] - state.alpha[i];
  } else {
    next.alpha = u;
  }
  // The B increment is C (dt u). Rounding dt u onto a dyadic grid fine enough
  // for the updated B keeps every sum below exact, so D b never drifts and a
  // divergence-free potential start stays exactly divergence-free.
  Vector v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = dt_ * u[i];
  const double bound = max_abs(state.beta) + 4.0 * max_abs(v);
  if (bound > 0.0 && std::isfinite(bound)) {
    int e = 0;
    std::frexp(bound, &e);
    const double quantum = std::ldexp(1.0, e - 48);
    for (double& x : v) x = std::nearbyint(x / quantum) * quantum;
  }
  next.beta = state.beta;
  axpy(-1.0, spmv(s.curl, v), next.beta);

  StepRecord rec;
  rec.t = t1;
  rec.energy = energy(s, next);
  rec.dissipation = dt_ * dot(u, spmv(s.sigma_e, u));
  rec.work = dt_ * dot(u, load_eff);
  rec.gauss_residual = gauss_residual(s, next.beta);
  rec.energy_identity_residual = std::abs(rec.energy + rec.dissipation - energy(s, state) - rec.work);
  return {std::move(next), rec};
}

std::pair<SimState, StepRecord> step_crank_nicolson(const SystemMatrices& sys, const SimState& state, double dt,
                                                    const SourceField& f, double solve_tol) {
  return TimeStepper(sys, dt, Stepper::CrankNicolson, solve_tol).step(state, f);
}

std::pair<SimState, StepRecord> step_backward_euler(const SystemMatrices& sys, const SimState& state, double dt,
                                                    const SourceField& f, double solve_tol) {
  return TimeStepper(sys, dt, Stepper::BackwardEuler, solve_tol).step(state, f);
}

std::size_t step_count(double duration, double dt) {
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InvalidArgument("run duration must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
  const double n = std::round(duration / dt);
  if (n < 1.0 || std::abs(n * dt - duration) > 1e-12 * std::max(1.0, duration)) {
    throw InvalidArgument("time step does not divide the run duration");
  }
  return static_cast<std::size_t>(n);
}

std::vector<StepRecord> run(const SystemMatrices& sys, const SimState& state0, double duration, double dt,
                            const SourceField& f, Stepper stepper, double solve_tol, const StepObserver& observer) {
  const std::size_t steps = step_count(duration, dt);
  const TimeStepper ts(sys, dt, stepper, solve_tol);

  std::vector<StepRecord> records;
  records.reserve(steps + 1);
  StepRecord first;
  first.t = state0.t;
  first.energy = energy(sys, state0);
  first.gauss_residual = gauss_residual(sys, state0.beta);
  records.push_back(first);
  if (observer) observer(state0, first);

  const double e0 = first.energy;
  double cum_dissipation = 0.0, cum_work = 0.0;
  SimState state = state0;
  for (std::size_t n = 1; n <= steps; ++n) {
    try {
      auto [next, rec] = ts.step(state, f);
      // Times are computed, not accumulated, so runs of any length stay on the grid.
      next.t = state0.t + static_cast<double>(n) * dt;
      rec.t = next.t;
      cum_dissipation += rec.dissipation;
      cum_work += rec.work;
      rec.energy_identity_residual = std::abs(rec.energy + cum_dissipation - e0 - cum_work);
      records.push_back(rec);
      if (observer) observer(next, rec);
      state = std::move(next);
    } catch (const std::exception& e) {
      throw RunAborted(std::string("step ") + std::to_string(n) + " failed: " + e.what(), std::move(records));
    }
  }
  return records;
}

SimState initial_state(const DeRhamComplex& complex, const SystemMatrices& sys, const InitialData& data,
                       BInit mode) {
  SimState s;
  s.t = data.t0;
  if (data.e0) {
    s.alpha = l2_project_nedelec(complex, data.e0).coefficients;
  } else {
    s.alpha.assign(sys.num_e(), 0.0);
  }

  if (mode == BInit::Potential) {
    if (static_cast<bool>(data.a0) != static_cast<bool>(data.curl_a0)) {
      throw InvalidArgument("potential initialization needs both A0 and curl A0");
    }
    s.beta = data.a0 ? potential_init_rt(complex, data.a0, data.curl_a0).coefficients
                     : Vector(sys.num_b(), 0.0);
  } else {
    s.beta = data.b0 ? constrained_project_rt(complex, data.b0).coefficients : Vector(sys.num_b(), 0.0);
  }
  return s;
}

std::string record_to_csv_row(const StepRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.energy, r.dissipation, r.work,
                r.gauss_residual, r.energy_identity_residual);
  return buf;
}

std::string records_to_csv(const std::vector<StepRecord>& records) {
  std::string out = std::string(kRecordCsvHeader) + "\n";
  for (const StepRecord& r : records) out += record_to_csv_row(r);
  return out;
}

}  // namespace maxwell
