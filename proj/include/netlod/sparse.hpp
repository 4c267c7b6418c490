#pragma once

// Sparse symmetric linear algebra used throughout the library: triplet
// assembly, submatrix extraction, and direct solvers for SPD and
// saddle-point systems. All matrices are immutable after assembly and safe
// for concurrent reads; factorizations are per-call values.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace netlod {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factorization rejected the matrix as not positive definite.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

/// System is singular (or numerically indistinguishable from singular).
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Ordered set of distinct global indices, strictly ascending.
class IndexSet {
 public:
  IndexSet() = default;

  /// Wraps an already strictly ascending list; throws otherwise.
  static IndexSet from_sorted(std::vector<Index> ids);
  /// Sorts and deduplicates.
  static IndexSet from_unsorted(std::vector<Index> ids);
  static IndexSet all(Index n);
  static IndexSet complement_of(const IndexSet& s, Index n);

  Index size() const { return static_cast<Index>(ids_.size()); }
  bool empty() const { return ids_.empty(); }
  Index operator[](Index k) const { return ids_[static_cast<size_t>(k)]; }
  const std::vector<Index>& ids() const { return ids_; }

  /// Position of id within the set, or -1 if absent.
  Index position(Index id) const;
  bool contains(Index id) const { return position(id) >= 0; }

  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

 private:
  std::vector<Index> ids_;
};

/// Builds a matrix from coordinate triplets; duplicate coordinates are
/// summed. Throws on out-of-range indices.
SpMat assemble(const std::vector<Triplet>& triplets, Index nrows, Index ncols);

/// A(rows, cols): result(i, j) = A(rows[i], cols[j]).
SpMat extract(const SpMat& A, const IndexSet& rows, const IndexSet& cols);

/// v(s) as a dense vector.
Vector gather(const Vector& v, const IndexSet& s);

/// dst(s) = values.
void scatter_into(Vector& dst, const IndexSet& s, const Vector& values);

double max_abs(const SpMat& A);

/// max |A_ij - A_ji| over all entries.
double symmetry_error(const SpMat& A);

/// Direct solve of an SPD system with iterative refinement down to a
/// relative residual of `tol` (for b != 0). Distinguishes indefinite
/// matrices (NotSpdError) from singular ones (SingularError).
Vector solve_spd(const SpMat& A, const Vector& b, double tol = 1e-10);

struct SaddleSolution {
  Vector phi;
  Vector eta;
  bool regularized = false;
};

/// Symmetric-indefinite factorization of the block system
///   [ K  C^T ] [phi]   [r]
///   [ C   0  ] [eta] = [0].
/// If the plain factorization is rejected or cannot reach the residual
/// tolerance, the zero block is replaced once by -eps*I with
/// eps = 1e-12 * max|K|, and solutions are flagged as regularized.
/// One factorization serves any number of right-hand sides.
class SaddleFactorization {
 public:
  SaddleFactorization(const SpMat& K, const SpMat& C);

  SaddleSolution solve(const Vector& r);

  Index rows() const { return nk_; }
  Index constraints() const { return mc_; }
  bool regularized() const { return regularized_; }

 private:
  void factor(bool regularized);
  bool refine(Vector& x, const Vector& rhs) const;

  Index nk_ = 0;
  Index mc_ = 0;
  SpMat K_;
  SpMat C_;
  SpMat block_;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  double eps_ = 0.0;
  bool regularized_ = false;
};

SaddleSolution solve_saddle(const SpMat& K, const SpMat& C, const Vector& r);

/// Coordinate text format: first line "nrows ncols nnz", then one
/// "row col value" entry per line, 0-based, full precision.
void write_coordinates(const SpMat& A, const std::string& path);
SpMat read_coordinates(const std::string& path);

}  // namespace netlod
