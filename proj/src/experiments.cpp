#include "maxwell/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <thread>

#include "maxwell/error.hpp"
#include "maxwell/projections.hpp"
#include "maxwell/quadrature.hpp"

namespace maxwell {

namespace cavity {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vec3 e(const Vec3& x, double t) {
  return {0.0, 0.0, std::sin(kPi * x.x) * std::sin(kPi * x.y) * std::cos(kOmega * t)};
}

Vec3 b(const Vec3& x, double t) {
  const double s = -(kPi / kOmega) * std::sin(kOmega * t);
  return {s * std::sin(kPi * x.x) * std::cos(kPi * x.y), -s * std::cos(kPi * x.x) * std::sin(kPi * x.y), 0.0};
}

Vec3 a(const Vec3& x, double t) {
  return {0.0, 0.0, -(std::sin(kOmega * t) / kOmega) * std::sin(kPi * x.x) * std::sin(kPi * x.y)};
}

Vec3 curl_e(const Vec3& x, double t) {
  const double s = kPi * std::cos(kOmega * t);
  return {s * std::sin(kPi * x.x) * std::cos(kPi * x.y), -s * std::cos(kPi * x.x) * std::sin(kPi * x.y), 0.0};
}

Vec3 curl_b(const Vec3& x, double t) {
  // d/dx B_y - d/dy B_x with B = s (sin cos, -cos sin, 0), s = -(pi/w) sin(wt)
  const double s = -(kPi / kOmega) * std::sin(kOmega * t);
  const double dbydx = -s * (-kPi * std::sin(kPi * x.x)) * std::sin(kPi * x.y);
  const double dbxdy = s * std::sin(kPi * x.x) * (-kPi * std::sin(kPi * x.y));
  return {0.0, 0.0, dbydx - dbxdy};
}

Vec3 dt_e(const Vec3& x, double t) {
  return {0.0, 0.0, -kOmega * std::sin(kPi * x.x) * std::sin(kPi * x.y) * std::sin(kOmega * t)};
}

Vec3 dt_b(const Vec3& x, double t) {
  const double s = -kPi * std::cos(kOmega * t);
  return {s * std::sin(kPi * x.x) * std::cos(kPi * x.y), -s * std::cos(kPi * x.x) * std::sin(kPi * x.y), 0.0};
}

double div_b(const Vec3& x, double t) {
  const double s = -(kPi / kOmega) * std::sin(kOmega * t);
  const double dbxdx = s * kPi * std::cos(kPi * x.x) * std::cos(kPi * x.y);
  const double dbydy = -s * std::cos(kPi * x.x) * kPi * std::cos(kPi * x.y);
  return dbxdx + dbydy;
}

std::pair<Vec3, Vec3> eval(double t, const Vec3& x) {
  constexpr double slack = 1e-12;
  for (int k = 0; k < 3; ++k) {
    if (!(x[k] >= -slack && x[k] <= 1.0 + slack)) throw InvalidArgument("cavity: point outside the unit cube");
  }
  return {e(x, t), b(x, t)};
}

InitialData initial_data(double t0) {
  InitialData d;
  d.t0 = t0;
  d.e0 = [t0](const Vec3& x) { return e(x, t0); };
  d.b0 = [t0](const Vec3& x) { return b(x, t0); };
  d.a0 = [t0](const Vec3& x) { return a(x, t0); };
  d.curl_a0 = [t0](const Vec3& x) { return b(x, t0); };
  return d;
}

SourceField consistent_source(const TensorField& sigma) {
  if (sigma.is_per_cell() && sigma.cell_values().size() != 1) {
    throw InvalidArgument("cavity source needs a constant or analytic sigma");
  }
  return [sigma](const Vec3& x, double t) { return sigma.value(0, x) * e(x, t); };
}

}  // namespace cavity

Vector random_vector(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  Vector v(n);
  for (double& x : v) x = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return v;
}

namespace {

ConvergenceRow run_level(std::size_t n, const ConvergenceOptions& opts) {
  const DeRhamComplex complex = build_complex(generate_box_mesh(n));
  const SystemMatrices sys =
      build_system(complex, TensorField::identity(), TensorField::identity(), TensorField::scalar(0.0));
  const SimState s0 = initial_state(complex, sys, cavity::initial_data(opts.t0), opts.b_init);

  ConvergenceRow row;
  row.n = n;
  row.h = mesh_size(complex.mesh());

  auto observe = [&](const SimState& s, const StepRecord&) {
    const double ee =
        l2_error_field(complex, s.alpha, Space::Nedelec, [t = s.t](const Vec3& x) { return cavity::e(x, t); });
    const double eb = l2_error_field(complex, s.beta, Space::RaviartThomas,
                                     [t = s.t](const Vec3& x) { return cavity::b(x, t); });
    row.err_e = std::max(row.err_e, ee);
    row.err_b = std::max(row.err_b, eb);
  };

  if (opts.duration == 0.0) {
    observe(s0, {});
    return row;
  }
  row.steps = static_cast<std::size_t>(std::ceil(opts.duration / (opts.dt_factor * row.h)));
  row.steps = std::max<std::size_t>(row.steps, 1);
  row.dt = opts.duration / static_cast<double>(row.steps);
  run(sys, s0, opts.duration, row.dt, {}, opts.stepper, opts.solve_tol, observe);
  return row;
}

}  // namespace

ConvergenceTable convergence_study(const ConvergenceOptions& opts) {
  if (opts.levels.empty()) throw InvalidArgument("convergence study needs at least one level");
  for (std::size_t i = 0; i < opts.levels.size(); ++i) {
    if (opts.levels[i] == 0 || (i > 0 && opts.levels[i] <= opts.levels[i - 1])) {
      throw InvalidArgument("convergence levels must be positive and ascending");
    }
  }
  if (!(opts.duration >= 0.0) || !std::isfinite(opts.duration)) throw InvalidArgument("duration must be >= 0");
  if (!(opts.dt_factor > 0.0)) throw InvalidArgument("dt factor must be positive");

  ConvergenceTable table;
  table.rows.resize(opts.levels.size());
  const std::size_t threads = std::clamp<std::size_t>(opts.threads, 1, opts.levels.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < opts.levels.size(); ++i) table.rows[i] = run_level(opts.levels[i], opts);
  } else {
    std::vector<std::exception_ptr> errors(opts.levels.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < opts.levels.size(); i += threads) {
          try {
            table.rows[i] = run_level(opts.levels[i], opts);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto& r = table.rows[i];
    if (i == 0) {
      r.order_e = r.order_b = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const auto& p = table.rows[i - 1];
    const double ratio = std::log(p.h / r.h);
    r.order_e = std::log(p.err_e / r.err_e) / ratio;
    r.order_b = std::log(p.err_b / r.err_b) / ratio;
  }
  return table;
}

std::string table_to_csv(const ConvergenceTable& table) {
  std::string out = "n,h,err_E,err_B,order_E,order_B\n";
  auto fmt = [](double v) {
    if (std::isnan(v)) return std::string("nan");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : table.rows) {
    out += std::to_string(r.n) + "," + fmt(r.h) + "," + fmt(r.err_e) + "," + fmt(r.err_b) + "," + fmt(r.order_e) +
           "," + fmt(r.order_b) + "\n";
  }
  return out;
}

bool InvariantReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

std::string InvariantReport::to_json() const {
  std::string out = "{\"n\":" + std::to_string(n) + ",\"all_passed\":" + (all_passed() ? "true" : "false") +
                    ",\"checks\":[";
  char buf[64];
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    if (i) out += ",";
    out += "{\"name\":\"" + c.name + "\",\"passed\":" + (c.passed ? "true" : "false");
    std::snprintf(buf, sizeof buf, ",\"value\":%.17g", c.value);
    out += buf;
    std::snprintf(buf, sizeof buf, ",\"tolerance\":%.17g}", c.tolerance);
    out += buf;
  }
  return out + "]}";
}

namespace {

// Points on a face given by its three vertices: centroid plus three interior points.
std::array<Vec3, 4> face_samples(const Vec3& p0, const Vec3& p1, const Vec3& p2) {
  auto bary = [&](double a, double b, double c) { return a * p0 + b * p1 + c * p2; };
  return {bary(1.0 / 3, 1.0 / 3, 1.0 / 3), bary(0.6, 0.2, 0.2), bary(0.2, 0.6, 0.2), bary(0.2, 0.2, 0.6)};
}

struct Suite {
  InvariantReport report;

  void expect_le(const std::string& name, double value, double tol) {
    report.checks.push_back({name, std::isfinite(value) && value <= tol, value, tol});
  }
  template <typename F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report.checks.push_back({name + " (threw: " + e.what() + ")", false, std::numeric_limits<double>::infinity(), 0.0});
    }
  }
};

double rayleigh_min(const CsrMatrix& m, std::uint64_t seed, int samples) {
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vector x = random_vector(m.rows(), seed + static_cast<std::uint64_t>(s));
    const double xx = dot(x, x);
    if (xx == 0.0) continue;
    worst = std::min(worst, dot(x, spmv(m, x)) / xx);
  }
  return worst;
}

}  // namespace

InvariantReport invariant_suite(std::size_t n, double duration, double dt) {
  Suite s;
  s.report.n = n;
  const DeRhamComplex cx = build_complex(generate_box_mesh(n));
  const TetMesh& mesh = cx.mesh();

  s.guarded("exactness", [&] {
    s.expect_le("exactness.DC_max", max_abs(multiply(cx.div(), cx.curl())), 0.0);
    s.expect_le("exactness.CG_max", max_abs(multiply(cx.curl(), cx.grad())), 0.0);
    // Dyadic coefficients keep every partial sum exact, so the check is exact too.
    Vector alpha = random_vector(cx.num_edges(), 11);
    for (double& a : alpha) a = std::ldexp(std::nearbyint(std::ldexp(a, 20)), -20);
    s.expect_le("exactness.curl_range_in_div_kernel", max_abs(spmv(cx.div(), curl_in_rt_coordinates(cx, alpha))),
                0.0);
  });

  s.guarded("conformity", [&] {
    const Vector ned = random_vector(cx.num_interior_edges(), 12);
    const Vector rt = random_vector(cx.num_faces(), 13);
    double tangential = 0.0, normal = 0.0;
    for (std::size_t f = 0; f < mesh.num_faces(); ++f) {
      const auto [c0, c1] = mesh.face_cells()[f];
      if (c1 == kNoIndex) continue;
      const Face& fv = mesh.faces()[f];
      const Vec3 &p0 = mesh.vertices()[fv[0]], &p1 = mesh.vertices()[fv[1]], &p2 = mesh.vertices()[fv[2]];
      Vec3 nrm = cross(p1 - p0, p2 - p0);
      nrm = (1.0 / norm(nrm)) * nrm;
      for (const Vec3& x : face_samples(p0, p1, p2)) {
        const Vec3 de = eval_nedelec(cx, ned, c0, x) - eval_nedelec(cx, ned, c1, x);
        tangential = std::max(tangential, norm(de - dot(de, nrm) * nrm));
        const Vec3 db = eval_rt(cx, rt, c0, x) - eval_rt(cx, rt, c1, x);
        normal = std::max(normal, std::abs(dot(db, nrm)));
      }
    }
    s.expect_le("conformity.N0_tangential_jump", tangential, 1e-12);
    s.expect_le("conformity.RT0_normal_jump", normal, 1e-12);
  });

  s.guarded("quadrature", [&] { s.expect_le("quadrature.degree2_exactness", quadrature_exactness_error(tet_quadrature(2)), 1e-15); });

  s.guarded("assembly", [&] {
    const CsrMatrix me = assemble_mass_nedelec(cx, TensorField::identity());
    const CsrMatrix mb = assemble_mass_rt(cx, TensorField::identity());
    const CsrMatrix ks = assemble_mass_sigma(cx, TensorField::identity());
    s.expect_le("assembly.M_E_symmetry", max_abs(add(1.0, me, -1.0, transpose(me))), 1e-14);
    s.expect_le("assembly.M_B_symmetry", max_abs(add(1.0, mb, -1.0, transpose(mb))), 1e-14);
    s.expect_le("assembly.M_E_min_rayleigh_negated", -rayleigh_min(me, 21, 10), 0.0);
    s.expect_le("assembly.M_B_min_rayleigh_negated", -rayleigh_min(mb, 22, 10), 0.0);
    s.expect_le("assembly.M_E_scaling", max_abs(add(1.0, assemble_mass_nedelec(cx, TensorField::scalar(2.0)), -2.0, me)), 0.0);
    s.expect_le("assembly.M_B_scaling", max_abs(add(1.0, assemble_mass_rt(cx, TensorField::scalar(4.0)), -4.0, mb)), 0.0);
    s.expect_le("assembly.sigma_equals_eps_form", max_abs(add(1.0, ks, -1.0, me)), 0.0);
    const CsrMatrix cp = assemble_curl_coupling(cx, TensorField::identity());
    const CsrMatrix cq = assemble_curl_coupling_quadrature(cx, TensorField::identity());
    s.expect_le("assembly.coupling_dual_path", max_abs(add(1.0, cp, -1.0, cq)), 1e-12);
    s.expect_le("assembly.M_E_degree4_oracle",
                max_abs(add(1.0, me, -1.0, assemble_mass_nedelec(cx, TensorField::identity(), 4))), 1e-12);
    s.expect_le("assembly.M_B_degree4_oracle",
                max_abs(add(1.0, mb, -1.0, assemble_mass_rt(cx, TensorField::identity(), 4))), 1e-12);
  });

  s.guarded("projections", [&] {
    auto u = [](const Vec3& x) {
      return Vec3{std::sin(std::numbers::pi * x.x), x.y * x.z, std::cos(x.x + x.y)};
    };
    const ProjectionReport prt = l2_project_rt(cx, u, {.tol = 1e-14});
    const double nu = l2_norm_field(cx, u);
    const double npu = l2_error_field(cx, prt.coefficients, Space::RaviartThomas, [](const Vec3&) { return Vec3{}; });
    s.expect_le("projections.rt_contractivity", npu - nu * (1.0 + 1e-10), 0.0);
    s.expect_le("projections.rt_pythagoras",
                std::abs(nu * nu - (*prt.l2_error * *prt.l2_error + npu * npu)) / (nu * nu), 1e-10);
    ProjectionOptions tight;
    tight.tol = 1e-14;
    const ProjectionReport again =
        l2_project_rt(cx, discrete_field(cx, prt.coefficients, Space::RaviartThomas), tight);
    Vector d = again.coefficients;
    axpy(-1.0, prt.coefficients, d);
    s.expect_le("projections.rt_idempotence", max_abs(d), 1e-12);

    if (cx.num_interior_edges() > 0) {
      const ProjectionReport pn = l2_project_nedelec(cx, cavity::initial_data(cavity::kShiftedStart).e0, tight);
      const ProjectionReport pn2 = l2_project_nedelec(cx, discrete_field(cx, pn.coefficients, Space::Nedelec), tight);
      Vector dn = pn2.coefficients;
      axpy(-1.0, pn.coefficients, dn);
      s.expect_le("projections.nedelec_idempotence", max_abs(dn), 1e-12);

      const Vector alpha = random_vector(cx.num_interior_edges(), 31);
      const ProjectionReport rr = riesz_project_nedelec(cx, discrete_field(cx, alpha, Space::Nedelec),
                                                        discrete_curl_field(cx, alpha), tight);
      Vector dr = rr.coefficients;
      axpy(-1.0, alpha, dr);
      s.expect_le("projections.riesz_reproduces_discrete", max_abs(dr), 1e-11);

      auto a0 = [](const Vec3& x) { return cavity::a(x, cavity::kShiftedStart); };
      auto ca0 = [](const Vec3& x) { return cavity::b(x, cavity::kShiftedStart); };
      const ProjectionReport ra = riesz_project_nedelec(cx, a0, ca0);
      const double na = std::hypot(l2_norm_field(cx, a0), l2_norm_field(cx, ca0));
      const double zero = 0.0;
      auto zf = [zero](const Vec3&) { return Vec3{zero, zero, zero}; };
      const double nra = std::hypot(l2_error_field(cx, ra.coefficients, Space::Nedelec, zf),
                                    l2_error_curl(cx, ra.coefficients, zf));
      s.expect_le("projections.riesz_contractivity", nra - na * (1.0 + 1e-10), 0.0);
    }

    auto b0 = [](const Vec3& x) { return Vec3{x.y * x.y, std::sin(x.z), x.x * x.y}; };
    const ProjectionReport cp = constrained_project_rt(cx, b0);
    s.expect_le("projections.constrained_div", cp.div_residual, 1e-10);
    s.expect_le("projections.constrained_kkt", std::max(cp.solver_residual, cp.constraint_residual), 1e-10);
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (std::uint64_t k = 0; k < 20; ++k) {
      Vector z = cp.coefficients;
      axpy(1e-2, curl_in_rt_coordinates(cx, random_vector(cx.num_edges(), 100 + k)), z);
      const double ez = l2_error_field(cx, z, Space::RaviartThomas, b0);
      worst_gap = std::max(worst_gap, *cp.l2_error - ez);
    }
    s.expect_le("projections.constrained_minimizer", worst_gap, 1e-14);
  });

  s.guarded("semidiscrete", [&] {
    const std::size_t steps = step_count(duration, dt);
    (void)steps;
    const TensorField id = TensorField::identity();
    const SystemMatrices lossless = build_system(cx, id, id, TensorField::scalar(0.0));
    const SystemMatrices lossy = build_system(cx, id, id, id);

    const InitialData data = cavity::initial_data(cavity::kShiftedStart);
    for (BInit mode : {BInit::Potential, BInit::Constrained}) {
      const std::string tag = mode == BInit::Potential ? "potential" : "constrained";
      const SimState s0 = initial_state(cx, lossless, data, mode);
      for (Stepper st : {Stepper::CrankNicolson, Stepper::BackwardEuler}) {
        const std::string stag = st == Stepper::CrankNicolson ? "cn" : "be";
        const auto rec = run(lossless, s0, duration, dt, {}, st);
        double drift = 0.0, cumulative = 0.0;
        for (std::size_t i = 1; i < rec.size(); ++i) {
          drift = std::max(drift, std::abs(rec[i].gauss_residual - rec[i - 1].gauss_residual));
          cumulative = std::max(cumulative, rec[i].gauss_residual);
        }
        s.expect_le("semidiscrete.gauss_step_drift." + tag + "." + stag, drift, 1e-12);
        s.expect_le("semidiscrete.gauss_cumulative." + tag + "." + stag, cumulative, 1e-10);
        if (st == Stepper::CrankNicolson) {
          double rel = 0.0;
          for (const auto& r : rec) rel = std::max(rel, std::abs(r.energy - rec[0].energy) / rec[0].energy);
          s.expect_le("semidiscrete.cn_energy_conservation." + tag, rel, 1e-10);
        } else {
          double increase = 0.0;
          for (std::size_t i = 1; i < rec.size(); ++i) increase = std::max(increase, rec[i].energy - rec[i - 1].energy);
          s.expect_le("semidiscrete.be_energy_nonincreasing." + tag, increase, 1e-12 * rec[0].energy);
        }
      }
    }

    const SimState s0 = initial_state(cx, lossy, data, BInit::Potential);
    const auto damped = run(lossy, s0, duration, dt, {}, Stepper::CrankNicolson);
    double increase = 0.0;
    for (std::size_t i = 1; i < damped.size(); ++i) increase = std::max(increase, damped[i].energy - damped[i - 1].energy);
    s.expect_le("semidiscrete.damped_energy_nonincreasing", increase, 1e-12 * damped[0].energy);

    const SourceField f = cavity::consistent_source(id);
    const auto forced = run(lossy, s0, duration, dt, f, Stepper::CrankNicolson);
    double per_step = 0.0, cumulative = 0.0;
    for (std::size_t i = 1; i < forced.size(); ++i) {
      per_step = std::max(per_step, std::abs(forced[i].energy - forced[i - 1].energy + forced[i].dissipation -
                                             forced[i].work));
      cumulative = std::max(cumulative, forced[i].energy_identity_residual);
    }
    const double scale = std::max(forced[0].energy, 1.0);
    s.expect_le("semidiscrete.energy_identity_per_step", per_step, 1e-10 * scale);
    s.expect_le("semidiscrete.energy_identity_cumulative", cumulative, 1e-10 * scale);

    // sup E_h <= e^T E_h(0) + e^T / (2 eps_min) int ||f||^2, measured on the run.
    double f_sq = 0.0, max_e = 0.0;
    for (std::size_t i = 0; i < forced.size(); ++i) {
      max_e = std::max(max_e, forced[i].energy);
      if (i == 0) continue;
      auto fnorm_sq = [&](double t) {
        const double v = l2_norm_field(cx, [&](const Vec3& x) { return f(x, t); });
        return v * v;
      };
      f_sq += 0.5 * (forced[i].t - forced[i - 1].t) * (fnorm_sq(forced[i - 1].t) + fnorm_sq(forced[i].t));
    }
    const double bound = std::exp(duration) * forced[0].energy + std::exp(duration) * 0.5 * f_sq;
    s.expect_le("semidiscrete.stability_bound_excess", max_e - bound, 0.0);

    // alpha^T Cpl beta - beta^T M_B C alpha = 0 by the factorization.
    const Vector a = random_vector(lossless.num_e(), 41), b = random_vector(lossless.num_b(), 42);
    const double skew = dot(a, spmv(lossless.coupling, b)) - dot(b, spmv(lossless.mass_b, spmv(lossless.curl, a)));
    s.expect_le("semidiscrete.skew_cross_terms", std::abs(skew), 1e-12 * std::max(1.0, norm2(a) * norm2(b)));
  });

  return s.report;
}

}  // namespace maxwell
