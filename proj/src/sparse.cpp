#include "maxwell/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "maxwell/error.hpp"

namespace maxwell {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                     std::vector<std::size_t> column_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      column_indices_(std::move(column_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != rows_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != column_indices_.size() || column_indices_.size() != values_.size()) {
    throw InvalidArgument("inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw InvalidArgument("CSR row offsets not monotone");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      if (column_indices_[k] >= cols_) throw InvalidArgument("CSR column index out of range");
      if (k > row_offsets_[i] && column_indices_[k] <= column_indices_[k - 1]) {
        throw InvalidArgument("CSR column indices not strictly increasing");
      }
    }
  }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const Triplet& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw InvalidArgument("triplet index out of range");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> cols_out;
  std::vector<double> vals;
  cols_out.reserve(triplets.size());
  vals.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const std::size_t r = triplets[k].row, c = triplets[k].col;
    double v = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) v += triplets[k].value;
    cols_out.push_back(c);
    vals.push_back(v);
    ++offsets[r + 1];
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return CsrMatrix(rows, cols, std::move(offsets), std::move(cols_out), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n) {
  Vector ones(n, 1.0);
  return diagonal(ones);
}

CsrMatrix CsrMatrix::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> offsets(n + 1), cols(n);
  std::iota(offsets.begin(), offsets.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  return CsrMatrix(n, n, std::move(offsets), std::move(cols), Vector(d.begin(), d.end()));
}

CsrMatrix CsrMatrix::zero(std::size_t rows, std::size_t cols) {
  return CsrMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {});
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  auto first = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  auto last = column_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - column_indices_.begin())];
}

Vector CsrMatrix::diagonal_values() const {
  Vector d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy: size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + ": non-finite entry");
  }
}

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) {
    throw DimensionMismatch("spmv: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                            std::to_string(x.size()) + " entries");
  }
  const auto& off = a.row_offsets();
  const auto& col = a.column_indices();
  const auto& val = a.values();
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
  return y;
}

CsrMatrix transpose(const CsrMatrix& a) {
  const auto& off = a.row_offsets();
  const auto& col = a.column_indices();
  const auto& val = a.values();
  std::vector<std::size_t> t_off(a.cols() + 1, 0);
  for (std::size_t c : col) ++t_off[c + 1];
  std::partial_sum(t_off.begin(), t_off.end(), t_off.begin());
  std::vector<std::size_t> t_col(a.nnz());
  Vector t_val(a.nnz());
  std::vector<std::size_t> next(t_off.begin(), t_off.end() - 1);
  // Rows visited in ascending order keep the transposed columns sorted.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      const std::size_t dst = next[col[k]]++;
      t_col[dst] = i;
      t_val[dst] = val[k];
    }
  }
  return CsrMatrix(a.cols(), a.rows(), std::move(t_off), std::move(t_col), std::move(t_val));
}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("multiply: inner dimensions differ");
  const auto& ao = a.row_offsets();
  const auto& ac = a.column_indices();
  const auto& av = a.values();
  const auto& bo = b.row_offsets();
  const auto& bc = b.column_indices();
  const auto& bv = b.values();

  std::vector<std::size_t> off(a.rows() + 1, 0), cols;
  Vector vals;
  Vector acc(b.cols(), 0.0);
  std::vector<bool> used(b.cols(), false);
  std::vector<std::size_t> pattern;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    pattern.clear();
    for (std::size_t k = ao[i]; k < ao[i + 1]; ++k) {
      const double s = av[k];
      const std::size_t r = ac[k];
      for (std::size_t q = bo[r]; q < bo[r + 1]; ++q) {
        const std::size_t j = bc[q];
        if (!used[j]) {
          used[j] = true;
          pattern.push_back(j);
        }
        acc[j] += s * bv[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (std::size_t j : pattern) {
      cols.push_back(j);
      vals.push_back(acc[j]);
      acc[j] = 0.0;
      used[j] = false;
    }
    off[i + 1] = cols.size();
  }
  return CsrMatrix(a.rows(), b.cols(), std::move(off), std::move(cols), std::move(vals));
}

CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionMismatch("add: shapes differ");
  std::vector<std::size_t> off(a.rows() + 1, 0), cols;
  Vector vals;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t p = a.row_offsets()[i], pe = a.row_offsets()[i + 1];
    std::size_t q = b.row_offsets()[i], qe = b.row_offsets()[i + 1];
    while (p < pe || q < qe) {
      const std::size_t cp = p < pe ? a.column_indices()[p] : a.cols();
      const std::size_t cq = q < qe ? b.column_indices()[q] : b.cols();
      if (cp == cq) {
        cols.push_back(cp);
        vals.push_back(alpha * a.values()[p++] + beta * b.values()[q++]);
      } else if (cp < cq) {
        cols.push_back(cp);
        vals.push_back(alpha * a.values()[p++]);
      } else {
        cols.push_back(cq);
        vals.push_back(beta * b.values()[q++]);
      }
    }
    off[i + 1] = cols.size();
  }
  return CsrMatrix(a.rows(), a.cols(), std::move(off), std::move(cols), std::move(vals));
}

CsrMatrix scale(const CsrMatrix& a, double s) {
  Vector vals = a.values();
  for (double& v : vals) v *= s;
  return CsrMatrix(a.rows(), a.cols(), a.row_offsets(), a.column_indices(), std::move(vals));
}

double max_abs(const CsrMatrix& a) { return max_abs(std::span<const double>(a.values())); }

CsrMatrix select(const CsrMatrix& a, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  std::vector<std::size_t> col_map(a.cols(), static_cast<std::size_t>(-1));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= a.cols()) throw InvalidArgument("select: column out of range");
    col_map[cols[j]] = j;
  }
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw InvalidArgument("select: row out of range");
    for (std::size_t k = a.row_offsets()[rows[i]]; k < a.row_offsets()[rows[i] + 1]; ++k) {
      const std::size_t j = col_map[a.column_indices()[k]];
      if (j != static_cast<std::size_t>(-1)) t.push_back({i, j, a.values()[k]});
    }
  }
  return CsrMatrix::from_triplets(rows.size(), cols.size(), std::move(t));
}

bool is_symmetric(const CsrMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const CsrMatrix d = add(1.0, a, -1.0, transpose(a));
  return max_abs(d) <= tol;
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const CgOptions& opts) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DimensionMismatch("cg_solve: matrix is not square");
  if (b.size() != n) throw DimensionMismatch("cg_solve: right-hand side size mismatch");
  require_finite(b, "cg_solve right-hand side");
  if (opts.check_symmetry && !is_symmetric(a, 1e-14 * std::max(1.0, max_abs(a)))) {
    throw InvalidArgument("cg_solve: matrix is not symmetric");
  }
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n + 100;

  Vector inv_diag = a.diagonal_values();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0)) {
      throw PreconditionerError("cg_solve: non-positive diagonal entry at row " + std::to_string(i),
                                std::numeric_limits<double>::infinity(), 0);
    }
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  CgResult res;
  res.x.assign(n, 0.0);
  const double b_norm = norm2(b);
  if (n == 0 || b_norm == 0.0) return res;

  if (!opts.initial_guess.empty()) {
    if (opts.initial_guess.size() != n) throw DimensionMismatch("cg_solve: initial guess size mismatch");
    res.x.assign(opts.initial_guess.begin(), opts.initial_guess.end());
  }

  auto true_residual = [&](Vector& r) {
    r = spmv(a, res.x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return norm2(r);
  };

  const double target = opts.tol * b_norm;
  Vector r, z(n), p(n), ap;
  double r_norm = true_residual(r);
  std::size_t it = 0;
  while (r_norm > target) {
    // (Re)start from the current true residual.
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] = inv_diag[i] * r[i];
    double rz = dot(r, z);
    while (r_norm > target) {
      if (it >= max_iter) {
        throw SolverError("cg_solve: no convergence after " + std::to_string(it) + " iterations", r_norm / b_norm,
                          it);
      }
      ap = spmv(a, p);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) throw SolverError("cg_solve: breakdown, matrix not positive definite", r_norm / b_norm, it);
      const double step = rz / pap;
      axpy(step, p, res.x);
      axpy(-step, ap, r);
      ++it;
      r_norm = norm2(r);
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    // The recurrence can drift from the true residual; confirm before returning.
    r_norm = true_residual(r);
  }
  res.iterations = it;
  res.relative_residual = r_norm / b_norm;
  return res;
}

SchurResult schur_solve(const CsrMatrix& m, const CsrMatrix& bt, std::span<const double> b,
                        std::span<const double> c, double tol, std::size_t max_outer) {
  const std::size_t n = m.rows();
  const std::size_t k = bt.cols();
  if (m.cols() != n || bt.rows() != n) throw DimensionMismatch("schur_solve: block shapes disagree");
  if (b.size() != n || c.size() != k) throw DimensionMismatch("schur_solve: right-hand side sizes disagree");
  if (!(tol > 0.0)) throw InvalidArgument("schur_solve: tolerance must be positive");
  require_finite(b, "schur_solve b");
  require_finite(c, "schur_solve c");

  const CsrMatrix bmat = transpose(bt);
  const double inner_tol = tol / 100.0;
  SchurResult res;

  auto solve_m = [&](std::span<const double> rhs) {
    CgOptions o;
    o.tol = inner_tol;
    CgResult r = cg_solve(m, rhs, o);
    res.inner_iterations += r.iterations;
    return std::move(r.x);
  };
  auto apply_s = [&](std::span<const double> q) { return spmv(bmat, solve_m(spmv(bt, q))); };

  // Jacobi preconditioner for S built from diag(M).
  Vector m_diag = m.diagonal_values();
  for (double d : m_diag) {
    if (!(d > 0.0)) throw PreconditionerError("schur_solve: non-positive diagonal in M", 0.0, 0);
  }
  Vector s_diag(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = bt.row_offsets()[i]; q < bt.row_offsets()[i + 1]; ++q) {
      const double v = bt.values()[q];
      s_diag[bt.column_indices()[q]] += v * v / m_diag[i];
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (!(s_diag[j] > 0.0)) {
      throw SolverError("schur_solve: constraint row " + std::to_string(j) + " is empty (rank-deficient)", 0.0, 0);
    }
  }

  // S p = B M^{-1} b - c
  Vector g = spmv(bmat, solve_m(b));
  for (std::size_t j = 0; j < k; ++j) g[j] -= c[j];
  const double target = 0.5 * tol * (1.0 + norm2(c));
  const std::size_t max_it = max_outer ? max_outer : 10 * k + 100;

  res.p.assign(k, 0.0);
  Vector r = g, z(k), d(k);
  for (std::size_t j = 0; j < k; ++j) d[j] = z[j] = r[j] / s_diag[j];
  double rz = dot(r, z);
  double r_norm = norm2(r);
  const double g_norm = std::max(norm2(g), 1e-300);
  while (r_norm > target) {
    if (res.outer_iterations >= max_it) {
      throw SolverError("schur_solve: outer CG did not converge (possibly rank-deficient constraint)", r_norm,
                        res.outer_iterations);
    }
    Vector sd = apply_s(d);
    const double dsd = dot(d, sd);
    if (!(dsd > 1e-14 * g_norm * norm2(d))) {
      throw SolverError("schur_solve: Schur complement is singular (rank-deficient constraint)", r_norm,
                        res.outer_iterations);
    }
    const double step = rz / dsd;
    axpy(step, d, res.p);
    axpy(-step, sd, r);
    ++res.outer_iterations;
    r_norm = norm2(r);
    for (std::size_t j = 0; j < k; ++j) z[j] = r[j] / s_diag[j];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t j = 0; j < k; ++j) d[j] = z[j] + beta * d[j];
  }

  Vector rhs(b.begin(), b.end());
  axpy(-1.0, spmv(bt, res.p), rhs);
  res.x = solve_m(rhs);

  Vector prim = spmv(m, res.x);
  axpy(1.0, spmv(bt, res.p), prim);
  for (std::size_t i = 0; i < n; ++i) prim[i] -= b[i];
  Vector cons = spmv(bmat, res.x);
  for (std::size_t j = 0; j < k; ++j) cons[j] -= c[j];
  res.primal_residual = norm2(prim);
  res.constraint_residual = norm2(cons);
  if (res.constraint_residual > tol * (1.0 + norm2(c)) || res.primal_residual > tol * (1.0 + norm2(b))) {
    throw SolverError("schur_solve: KKT residuals above tolerance after convergence",
                      std::max(res.constraint_residual, res.primal_residual), res.outer_iterations);
  }
  return res;
}

std::string write_matrix_market(const CsrMatrix& a) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "%zu %zu %zu\n", a.rows(), a.cols(), a.nnz());
  out += buf;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = a.row_offsets()[i]; k < a.row_offsets()[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i + 1, a.column_indices()[k] + 1, a.values()[k]);
      out += buf;
    }
  }
  return out;
}

}  // namespace maxwell
