#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "maxwell/error.hpp"
#include "maxwell/experiments.hpp"
#include "maxwell/mesh.hpp"
#include "maxwell/projections.hpp"
#include "maxwell/semidiscrete.hpp"

namespace maxwell::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out = open_output(path);
  out << text;
  if (!out.flush()) throw IoError("cannot write " + path.string());
}

std::size_t thread_count() {
  const char* env = std::getenv("MAXWELL_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) throw ConfigError("MAXWELL_THREADS must be an integer in [1, 1024]");
  return static_cast<std::size_t>(v);
}

// ---- strict JSON config access ----

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

const Json& require(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + key + "' in " + where);
  return obj.at(key);
}

double number(const Json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(name + " must be finite");
  return x;
}

double positive(const Json& v, const std::string& name) {
  const double x = number(v, name);
  if (!(x > 0.0)) throw ConfigError(name + " must be positive");
  return x;
}

std::string string(const Json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError(name + " must be a string");
  return v.get<std::string>();
}

// Relative paths in a config are taken relative to the config file.
fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Stepper parse_stepper(const std::string& s) {
  if (s == "crank-nicolson") return Stepper::CrankNicolson;
  if (s == "backward-euler") return Stepper::BackwardEuler;
  throw ConfigError("stepper must be \"crank-nicolson\" or \"backward-euler\"");
}

BInit parse_b_init(const std::string& s) {
  if (s == "potential") return BInit::Potential;
  if (s == "constrained") return BInit::Constrained;
  throw ConfigError("b_init must be \"potential\" or \"constrained\"");
}

std::shared_ptr<const TetMesh> load_mesh(const fs::path& path) {
  return std::make_shared<const TetMesh>(read_mesh(read_file(path)));
}

std::shared_ptr<const TetMesh> mesh_from_config(const Json& node, const fs::path& base) {
  check_keys(node, {"n", "file"}, "mesh");
  if (node.contains("n") == node.contains("file")) throw ConfigError("mesh needs exactly one of 'n' or 'file'");
  if (node.contains("file")) return load_mesh(resolve(base, string(node.at("file"), "mesh.file")));
  const Json& n = node.at("n");
  if (!n.is_number_integer() || n.get<long long>() < 1) throw ConfigError("mesh.n must be a positive integer");
  return std::make_shared<const TetMesh>(generate_box_mesh(n.get<std::size_t>()));
}

/// Per-cell coefficient file: one line per cell holding either a scalar s
/// (meaning s I) or nine numbers (row-major 3x3). '#' lines and blank lines
/// are skipped.
std::vector<Mat3> read_coefficients(const std::string& text, std::size_t cells) {
  std::vector<Mat3> values;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> nums;
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (*end != '\0' || !std::isfinite(v)) throw ParseError(lineno, "bad number '" + tok + "'");
      nums.push_back(v);
    }
    if (nums.size() == 1) {
      values.push_back(Mat3::identity(nums[0]));
    } else if (nums.size() == 9) {
      Mat3 m;
      for (int i = 0; i < 9; ++i) m.a[i] = nums[i];
      values.push_back(m);
    } else {
      throw ParseError(lineno, "expected 1 or 9 numbers per cell");
    }
  }
  if (values.size() != cells) {
    throw ParseError(lineno, "expected " + std::to_string(cells) + " cell values, found " +
                                 std::to_string(values.size()));
  }
  return values;
}

TensorField tensor_from_config(const Json& node, const std::string& name, const fs::path& base, std::size_t cells) {
  if (node.is_string()) {
    if (node.get<std::string>() == "identity") return TensorField::identity();
    throw ConfigError(name + ": unknown tensor \"" + node.get<std::string>() + "\"");
  }
  if (node.is_number()) return TensorField::scalar(number(node, name));
  if (node.is_object()) {
    check_keys(node, {"file"}, name);
    const fs::path p = resolve(base, string(require(node, "file", name), name + ".file"));
    return TensorField::per_cell(read_coefficients(read_file(p), cells));
  }
  throw ConfigError(name + " must be \"identity\", a number or {\"file\": path}");
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

// ---- subcommands ----

int cmd_mesh(std::size_t n, const std::string& out_path, std::ostream& out) {
  if (n < 1) throw ConfigError("--n must be at least 1");
  const TetMesh m = generate_box_mesh(n);
  if (!out_path.empty()) write_file(out_path, write_mesh(m));
  Json j;
  j["V"] = m.num_vertices();
  j["E"] = m.num_edges();
  j["F"] = m.num_faces();
  j["C"] = m.num_cells();
  j["h"] = mesh_size(m);
  j["euler"] = m.euler_characteristic();
  out << json_text(j);
  return kOk;
}

std::shared_ptr<const TetMesh> mesh_from_args(std::size_t n, const std::string& file) {
  if (!file.empty()) return load_mesh(file);
  if (n < 1) throw ConfigError("give --mesh FILE or --n N >= 1");
  return std::make_shared<const TetMesh>(generate_box_mesh(n));
}

int cmd_check_complex(std::size_t n, const std::string& file, std::ostream& out) {
  const DeRhamComplex c(mesh_from_args(n, file));
  const TetMesh& m = c.mesh();
  std::size_t boundary_edges = 0, boundary_faces = 0;
  for (std::size_t e = 0; e < m.num_edges(); ++e) boundary_edges += m.is_boundary_edge(e);
  for (std::size_t f = 0; f < m.num_faces(); ++f) boundary_faces += m.is_boundary_face(f);
  Json j;
  j["DC_max"] = max_abs(multiply(c.div(), c.curl()));
  j["CG_max"] = max_abs(multiply(c.curl(), c.grad()));
  j["interior_edges"] = c.num_interior_edges();
  j["boundary_edges"] = boundary_edges;
  j["boundary_faces"] = boundary_faces;
  j["interior_vertices"] = c.interior_vertices().size();
  j["boundary_vertices"] = c.boundary_vertices().size();
  j["counts"] = {{"V", m.num_vertices()}, {"E", m.num_edges()}, {"F", m.num_faces()}, {"C", m.num_cells()}};
  j["euler"] = m.euler_characteristic();
  out << json_text(j);
  return kOk;
}

int cmd_project(std::size_t n, const std::string& file, const std::string& kind, double t, double tol,
                std::ostream& out) {
  if (!(tol > 0.0)) throw ConfigError("--tol must be positive");
  const DeRhamComplex c(mesh_from_args(n, file));
  const VectorField e = [t](const Vec3& x) { return cavity::e(x, t); };
  const VectorField curl_e = [t](const Vec3& x) { return cavity::curl_e(x, t); };
  const VectorField a = [t](const Vec3& x) { return cavity::a(x, t); };
  const VectorField b = [t](const Vec3& x) { return cavity::b(x, t); };
  ProjectionOptions o;
  o.tol = tol;

  ProjectionReport r;
  std::string target;
  if (kind == "rt") {
    r = l2_project_rt(c, b, o), target = "B";
  } else if (kind == "nedelec") {
    r = l2_project_nedelec(c, e, o), target = "E";
  } else if (kind == "riesz") {
    r = riesz_project_nedelec(c, e, curl_e, o), target = "E";
  } else if (kind == "constrained") {
    r = constrained_project_rt(c, b, o), target = "B";
  } else if (kind == "potential") {
    r = potential_init_rt(c, a, b, b, o), target = "B";
  } else {
    throw ConfigError("--kind must be one of rt, nedelec, riesz, constrained, potential");
  }

  Json j;
  j["kind"] = kind;
  j["field"] = "cavity " + target;
  j["t"] = t;
  j["dofs"] = r.coefficients.size();
  j["residuals"] = {{"solver", r.solver_residual}, {"constraint", r.constraint_residual}};
  j["iterations"] = r.iterations;
  j["l2_error"] = r.l2_error ? Json(*r.l2_error) : Json(nullptr);
  if (r.hcurl_error) j["hcurl_error"] = *r.hcurl_error;
  j["div_residual"] = target == "B" ? Json(r.div_residual) : Json(nullptr);
  out << json_text(j);
  return kOk;
}

struct RunConfig {
  std::shared_ptr<const TetMesh> mesh;
  TensorField eps = TensorField::identity();
  TensorField mu_inv = TensorField::identity();
  TensorField sigma = TensorField::scalar(0.0);
  std::string source = "zero";
  std::string initial = "cavity";
  double t0 = 0.0;
  BInit b_init = BInit::Potential;
  double duration = 0.0;
  std::optional<double> dt;
  double dt_factor = 0.0;
  Stepper stepper = Stepper::CrankNicolson;
  double solve_tol = 1e-12;
  fs::path csv;
  fs::path summary;
};

RunConfig parse_run_config(const Json& j, const fs::path& base) {
  check_keys(j,
             {"mesh", "eps", "mu_inv", "sigma", "source", "initial", "t0", "b_init", "T", "dt", "dt_policy",
              "stepper", "solve_tol", "output"},
             "run config");
  RunConfig c;
  c.mesh = mesh_from_config(require(j, "mesh", "run config"), base);
  const std::size_t cells = c.mesh->num_cells();
  if (j.contains("eps")) c.eps = tensor_from_config(j.at("eps"), "eps", base, cells);
  if (j.contains("mu_inv")) c.mu_inv = tensor_from_config(j.at("mu_inv"), "mu_inv", base, cells);
  if (j.contains("sigma")) c.sigma = tensor_from_config(j.at("sigma"), "sigma", base, cells);
  if (j.contains("source")) {
    c.source = string(j.at("source"), "source");
    if (c.source != "zero" && c.source != "cavity-consistent") {
      throw ConfigError("source must be \"zero\" or \"cavity-consistent\"");
    }
  }
  if (j.contains("initial")) {
    c.initial = string(j.at("initial"), "initial");
    if (c.initial != "cavity" && c.initial != "zero") throw ConfigError("initial must be \"cavity\" or \"zero\"");
  }
  if (j.contains("t0")) c.t0 = number(j.at("t0"), "t0");
  if (j.contains("b_init")) c.b_init = parse_b_init(string(j.at("b_init"), "b_init"));
  c.duration = positive(require(j, "T", "run config"), "T");
  if (j.contains("dt") == j.contains("dt_policy")) throw ConfigError("give exactly one of 'dt' or 'dt_policy'");
  if (j.contains("dt")) {
    c.dt = positive(j.at("dt"), "dt");
  } else {
    const std::string p = string(j.at("dt_policy"), "dt_policy");
    if (p != "h/8") throw ConfigError("dt_policy must be \"h/8\"");
    c.dt_factor = 1.0 / 8.0;
  }
  if (j.contains("stepper")) c.stepper = parse_stepper(string(j.at("stepper"), "stepper"));
  if (j.contains("solve_tol")) c.solve_tol = positive(j.at("solve_tol"), "solve_tol");
  const Json& o = require(j, "output", "run config");
  check_keys(o, {"csv", "summary"}, "output");
  c.csv = resolve(base, string(require(o, "csv", "output"), "output.csv"));
  if (o.contains("summary")) c.summary = resolve(base, string(o.at("summary"), "output.summary"));
  return c;
}

Json parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

int cmd_run(const std::string& config_path, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path cfg_path(config_path);
  const RunConfig cfg = parse_run_config(parse_json_file(cfg_path), cfg_path.parent_path());

  const DeRhamComplex complex(cfg.mesh);
  const SystemMatrices sys = build_system(complex, cfg.eps, cfg.mu_inv, cfg.sigma);
  InitialData data;
  data.t0 = cfg.t0;
  if (cfg.initial == "cavity") data = cavity::initial_data(cfg.t0);
  const SimState s0 = initial_state(complex, sys, data, cfg.b_init);
  const SourceField f = cfg.source == "cavity-consistent" ? cavity::consistent_source(cfg.sigma) : SourceField{};
  double dt = 0.0;
  if (cfg.dt) {
    dt = *cfg.dt;
  } else {
    const double target = cfg.dt_factor * mesh_size(*cfg.mesh);
    dt = cfg.duration / std::ceil(cfg.duration / target);
  }

  std::ofstream csv = open_output(cfg.csv);
  csv << kRecordCsvHeader << '\n';
  auto observer = [&](const SimState&, const StepRecord& r) {
    csv << record_to_csv_row(r);
    if (!csv) throw IoError("cannot write " + cfg.csv.string());
  };

  std::vector<StepRecord> records;
  try {
    records = run(sys, s0, cfg.duration, dt, f, cfg.stepper, cfg.solve_tol, observer);
  } catch (const RunAborted& e) {
    csv.flush();
    err << "error: " << e.what() << " (" << e.records().size() << " records written to " << cfg.csv.string()
        << ")\n";
    return kSolverError;
  }
  csv.flush();
  if (!csv) throw IoError("cannot write " + cfg.csv.string());

  double max_gauss = 0.0, max_identity = 0.0;
  for (const StepRecord& r : records) {
    max_gauss = std::max(max_gauss, r.gauss_residual);
    max_identity = std::max(max_identity, r.energy_identity_residual);
  }
  Json j;
  j["steps"] = records.size() - 1;
  j["dt"] = dt;
  j["initial_energy"] = records.front().energy;
  j["final_energy"] = records.back().energy;
  j["max_gauss_residual"] = max_gauss;
  j["max_energy_identity_residual"] = max_identity;
  j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.summary.empty()) write_file(cfg.summary, json_text(j));
  out << json_text(j);
  return kOk;
}

int cmd_convergence(const std::string& config_path, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path cfg_path(config_path);
  const Json j = parse_json_file(cfg_path);
  check_keys(j, {"levels", "T", "dt_factor", "t0", "b_init", "stepper", "solve_tol", "order_band", "output"},
             "convergence config");

  ConvergenceOptions o;
  const Json& levels = require(j, "levels", "convergence config");
  if (!levels.is_array() || levels.empty()) throw ConfigError("levels must be a non-empty array");
  o.levels.clear();
  for (const Json& l : levels) {
    if (!l.is_number_integer() || l.get<long long>() < 1) throw ConfigError("levels must be positive integers");
    o.levels.push_back(l.get<std::size_t>());
  }
  o.duration = number(require(j, "T", "convergence config"), "T");
  if (o.duration < 0.0) throw ConfigError("T must be non-negative");
  if (j.contains("dt_factor")) o.dt_factor = positive(j.at("dt_factor"), "dt_factor");
  if (j.contains("t0")) o.t0 = number(j.at("t0"), "t0");
  if (j.contains("b_init")) o.b_init = parse_b_init(string(j.at("b_init"), "b_init"));
  if (j.contains("stepper")) o.stepper = parse_stepper(string(j.at("stepper"), "stepper"));
  if (j.contains("solve_tol")) o.solve_tol = positive(j.at("solve_tol"), "solve_tol");
  double band_lo = 0.8, band_hi = 1.6;
  if (j.contains("order_band")) {
    const Json& b = j.at("order_band");
    if (!b.is_array() || b.size() != 2) throw ConfigError("order_band must be [low, high]");
    band_lo = number(b[0], "order_band[0]"), band_hi = number(b[1], "order_band[1]");
    if (!(band_lo < band_hi)) throw ConfigError("order_band must be increasing");
  }
  const Json& output = require(j, "output", "convergence config");
  check_keys(output, {"csv"}, "output");
  const fs::path csv_path = resolve(cfg_path.parent_path(), string(require(output, "csv", "output"), "output.csv"));
  o.threads = thread_count();

  const ConvergenceTable table = convergence_study(o);
  write_file(csv_path, table_to_csv(table));

  bool decreasing = true, in_band = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const ConvergenceRow& r = table.rows[i];
    decreasing = decreasing && r.err_e < table.rows[i - 1].err_e && r.err_b < table.rows[i - 1].err_b;
    in_band = in_band && r.order_e >= band_lo && r.order_e <= band_hi;
  }
  Json s;
  s["levels"] = table.rows.size();
  s["errors_decreasing"] = decreasing;
  s["order_E_in_band"] = in_band;
  s["order_band"] = {band_lo, band_hi};
  Json rows = Json::array();
  for (const ConvergenceRow& r : table.rows) {
    rows.push_back({{"n", r.n}, {"h", r.h}, {"dt", r.dt}, {"steps", r.steps}, {"err_E", r.err_e},
                    {"err_B", r.err_b}, {"order_E", r.order_e}, {"order_B", r.order_b}});
  }
  s["rows"] = rows;
  s["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << json_text(s);
  return kOk;
}

int cmd_invariants(std::size_t n, double duration, double dt, std::ostream& out) {
  if (n < 1) throw ConfigError("--n must be at least 1");
  const InvariantReport r = invariant_suite(n, duration, dt);
  out << r.to_json() << "\n";
  return r.all_passed() ? kOk : kSolverError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structure-preserving finite elements for the time-domain Maxwell system"};
  app.require_subcommand(1);

  std::size_t n = 0;
  std::string path, mesh_file, kind = "rt";
  double t = cavity::kShiftedStart, tol = 1e-12, duration = 0.125, dt = 1.0 / 64;

  auto* mesh = app.add_subcommand("mesh", "Generate a Kuhn box mesh of the unit cube");
  mesh->add_option("--n", n, "Subdivisions per axis")->required();
  mesh->add_option("--out", path, "Mesh file to write");

  auto* check = app.add_subcommand("check-complex", "Report exactness and DOF counts of the de Rham complex");
  check->add_option("--n", n, "Use a generated mesh with n subdivisions");
  check->add_option("--mesh", mesh_file, "Mesh file");

  auto* project = app.add_subcommand("project", "Project cavity-mode data at time t");
  project->add_option("--n", n, "Use a generated mesh with n subdivisions");
  project->add_option("--mesh", mesh_file, "Mesh file");
  project->add_option("--kind", kind, "rt | nedelec | riesz | constrained | potential");
  project->add_option("--t", t, "Evaluation time");
  project->add_option("--tol", tol, "Solver tolerance");

  auto* run_cmd = app.add_subcommand("run", "Integrate the semi-discrete system from a JSON config");
  run_cmd->add_option("config", path, "Run config (JSON)")->required();

  auto* conv = app.add_subcommand("convergence", "Cavity-mode refinement study from a JSON config");
  conv->add_option("config", path, "Study config (JSON)")->required();

  auto* inv = app.add_subcommand("invariants", "Run the structural invariant checks and print a JSON report");
  inv->add_option("--n", n, "Subdivisions per axis")->required();
  inv->add_option("--T", duration, "Duration of the cavity runs");
  inv->add_option("--dt", dt, "Time step of the cavity runs");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  try {
    if (*mesh) return cmd_mesh(n, path, out);
    if (*check) return cmd_check_complex(n, mesh_file, out);
    if (*project) return cmd_project(n, mesh_file, kind, t, tol, out);
    if (*run_cmd) return cmd_run(path, out, err);
    if (*conv) return cmd_convergence(path, out);
    if (*inv) return cmd_invariants(n, duration, dt, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kSolverError;
  }
  return kValidationError;
}

}  // namespace maxwell::cli
