#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "maxwell/assembly.hpp"
#include "maxwell/derham.hpp"
#include "maxwell/sparse.hpp"

namespace maxwell {

/// Blocks of the semi-discrete Maxwell system
///   M_E a' + K_E a - Cpl b = F(t)
///   b' + C a = 0
/// with a the E coefficients on interior edges and b the B coefficients on
/// faces. Cpl = C^T M_B, so the Faraday block is skew with respect to the
/// energy inner product.
struct SystemMatrices {
  /// Needed only to assemble loads; may be null for source-free systems.
  const DeRhamComplex* complex = nullptr;
  CsrMatrix mass_e;      // (eps psi_i, psi_j)
  CsrMatrix sigma_e;     // (sigma psi_i, psi_j)
  CsrMatrix coupling;    // (mu_inv phi_j, curl psi_i), interior edges x faces
  CsrMatrix mass_b;      // (mu_inv phi_i, phi_j)
  CsrMatrix curl;        // C restricted to interior edges, faces x interior edges
  CsrMatrix curl_curl;   // C^T M_B C
  CsrMatrix div;         // D, cells x faces

  std::size_t num_e() const { return mass_e.rows(); }
  std::size_t num_b() const { return mass_b.rows(); }
};

/// The complex must outlive the returned matrices.
SystemMatrices build_system(const DeRhamComplex& complex, const TensorField& eps, const TensorField& mu_inv,
                            const TensorField& sigma);

struct SimState {
  double t = 0.0;
  Vector alpha;  // E_h, interior edges
  Vector beta;   // B_h, faces
};

struct StepRecord {
  double t = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;  // integral of (sigma E_h, E_h) over the step
  double work = 0.0;         // integral of (f, E_h) over the step
  double gauss_residual = 0.0;             // max_K |(div B_h, 1_K)|
  double energy_identity_residual = 0.0;   // |E(t) + sum dissipation - E(0) - sum work|
};

enum class Stepper { CrankNicolson, BackwardEuler };

/// 1/2 (a^T M_E a + b^T M_B b).
double energy(const SystemMatrices& sys, const SimState& state);
double gauss_residual(const SystemMatrices& sys, std::span<const double> beta);

/// Time integrator for a fixed step size; the implicit operator
///   CN: M_E + dt/2 K_E + dt^2/4 C^T M_B C
///   BE: M_E + dt K_E + dt^2 C^T M_B C
/// is formed once and every step is one CG solve.
class TimeStepper {
 public:
  TimeStepper(const SystemMatrices& sys, double dt, Stepper kind, double solve_tol = 1e-12);

  /// Advances one step. `f` may be empty (no source). The record's
  /// energy_identity_residual is the single-step balance defect.
  std::pair<SimState, StepRecord> step(const SimState& state, const SourceField& f) const;

  double dt() const { return dt_; }
  Stepper kind() const { return kind_; }

 private:
  Vector load(const SourceField& f, double t) const;

  const SystemMatrices* sys_;
  double dt_;
  Stepper kind_;
  double tol_;
  CsrMatrix op_;
};

std::pair<SimState, StepRecord> step_crank_nicolson(const SystemMatrices& sys, const SimState& state, double dt,
                                                    const SourceField& f, double solve_tol = 1e-12);
std::pair<SimState, StepRecord> step_backward_euler(const SystemMatrices& sys, const SimState& state, double dt,
                                                    const SourceField& f, double solve_tol = 1e-12);

/// Thrown when a step fails mid-run; carries every record produced so far.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, std::vector<StepRecord> records)
      : std::runtime_error(what), records_(std::move(records)) {}
  const std::vector<StepRecord>& records() const { return records_; }

 private:
  std::vector<StepRecord> records_;
};

using StepObserver = std::function<void(const SimState&, const StepRecord&)>;

/// Number of steps of size dt covering `duration`; throws InvalidArgument
/// unless dt divides duration to within 1e-12 max(1, duration).
std::size_t step_count(double duration, double dt);

/// Integrates from state0.t to state0.t + duration. Returns one record for
/// the initial state followed by one per step, with cumulative
/// energy_identity_residual. `observer` (optional) sees each state.
std::vector<StepRecord> run(const SystemMatrices& sys, const SimState& state0, double duration, double dt,
                            const SourceField& f, Stepper stepper, double solve_tol = 1e-12,
                            const StepObserver& observer = {});

enum class BInit { Potential, Constrained };

/// Analytic initial data; empty callables mean zero fields.
struct InitialData {
  VectorField e0;
  VectorField b0;
  VectorField a0;       // vector potential, potential mode only
  VectorField curl_a0;  // its analytic curl
  double t0 = 0.0;
};

/// alpha = Q_h^N E0 and beta from the selected B initialization: curl R_h A0
/// (potential) or the constrained L2 projection of B0 onto Z_h.
SimState initial_state(const DeRhamComplex& complex, const SystemMatrices& sys, const InitialData& data,
                       BInit mode);

inline constexpr const char* kRecordCsvHeader = "t,energy,dissipation,work,gauss_residual,energy_identity_residual";

/// One CSV line (with newline), 17 significant digits.
std::string record_to_csv_row(const StepRecord& r);
/// Header line followed by one row per record.
std::string records_to_csv(const std::vector<StepRecord>& records);

}  // namespace maxwell
