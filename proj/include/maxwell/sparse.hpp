#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace maxwell {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; explicit zeros may be stored.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> column_indices, std::vector<double> values);

  /// Duplicates are summed in input order after a stable sort by (row, col),
  /// so the result only depends on the triplet sequence.
  static CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static CsrMatrix identity(std::size_t n);
  static CsrMatrix diagonal(std::span<const double> d);
  static CsrMatrix zero(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& column_indices() const { return column_indices_; }
  const std::vector<double>& values() const { return values_; }

  /// Stored value at (i, j), or 0.
  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_values() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::size_t> column_indices_;
  std::vector<double> values_;
};

// Dense vector helpers; all reductions run in ascending index order.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);
/// Throws InvalidArgument naming `what` if any entry is NaN or infinite.
void require_finite(std::span<const double> v, const char* what);

Vector spmv(const CsrMatrix& a, std::span<const double> x);
CsrMatrix transpose(const CsrMatrix& a);
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b);
/// alpha * a + beta * b
CsrMatrix add(double alpha, const CsrMatrix& a, double beta, const CsrMatrix& b);
CsrMatrix scale(const CsrMatrix& a, double s);
double max_abs(const CsrMatrix& a);
/// Keeps the listed rows and columns, in the listed order.
CsrMatrix select(const CsrMatrix& a, std::span<const std::size_t> rows, std::span<const std::size_t> cols);
bool is_symmetric(const CsrMatrix& a, double tol = 0.0);

struct CgOptions {
  double tol = 1e-12;            // relative residual ||Ax - b|| / ||b||
  std::size_t max_iter = 0;      // 0 selects 10 * n + 100
  bool check_symmetry = false;
  std::span<const double> initial_guess{};
};

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for SPD systems. The returned
/// residual is recomputed from x, not taken from the recurrence.
/// Throws PreconditionerError on a non-positive diagonal entry and
/// SolverError on breakdown or when max_iter is exhausted.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const CgOptions& opts = {});

struct SchurResult {
  Vector x;  // primal
  Vector p;  // multiplier
  std::size_t outer_iterations = 0;
  std::size_t inner_iterations = 0;
  double primal_residual = 0.0;      // ||M x + B^T p - b||
  double constraint_residual = 0.0;  // ||B x - c||
};

/// Solves the saddle-point system
///   [ M  B^T ] [x]   [b]
///   [ B   0  ] [p] = [c]
/// by CG on the Schur complement S = B M^{-1} B^T with inner CG solves at
/// tol / 100. Requires M SPD and B of full row rank; on return
/// ||Bx - c|| <= tol (1 + ||c||) and ||Mx + B^T p - b|| <= tol (1 + ||b||).
SchurResult schur_solve(const CsrMatrix& m, const CsrMatrix& bt, std::span<const double> b,
                        std::span<const double> c, double tol, std::size_t max_outer = 0);

/// Coordinate-format MatrixMarket text, 1-based indices.
std::string write_matrix_market(const CsrMatrix& a);

}  // namespace maxwell
