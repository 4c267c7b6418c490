#include "netlod/sparse.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace netlod {

IndexSet IndexSet::from_sorted(std::vector<Index> ids) {
  for (size_t k = 0; k + 1 < ids.size(); ++k) {
    if (ids[k] >= ids[k + 1]) {
      throw Error("IndexSet: indices must be strictly ascending");
    }
  }
  if (!ids.empty() && ids.front() < 0) {
    throw Error("IndexSet: negative index");
  }
  IndexSet s;
  s.ids_ = std::move(ids);
  return s;
}

IndexSet IndexSet::from_unsorted(std::vector<Index> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return from_sorted(std::move(ids));
}

IndexSet IndexSet::all(Index n) {
  std::vector<Index> ids(static_cast<size_t>(n));
  for (Index k = 0; k < n; ++k) ids[static_cast<size_t>(k)] = k;
  IndexSet s;
  s.ids_ = std::move(ids);
  return s;
}

IndexSet IndexSet::complement_of(const IndexSet& s, Index n) {
  std::vector<Index> ids;
  ids.reserve(static_cast<size_t>(n) - s.ids_.size());
  size_t p = 0;
  for (Index k = 0; k < n; ++k) {
    if (p < s.ids_.size() && s.ids_[p] == k) {
      ++p;
    } else {
      ids.push_back(k);
    }
  }
  IndexSet c;
  c.ids_ = std::move(ids);
  return c;
}

Index IndexSet::position(Index id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return -1;
  return static_cast<Index>(it - ids_.begin());
}

SpMat assemble(const std::vector<Triplet>& triplets, Index nrows, Index ncols) {
  for (const auto& t : triplets) {
    if (t.row() < 0 || t.row() >= nrows || t.col() < 0 || t.col() >= ncols) {
      throw Error("assemble: triplet (" + std::to_string(t.row()) + ", " +
                  std::to_string(t.col()) + ") out of range for " +
                  std::to_string(nrows) + "x" + std::to_string(ncols));
    }
  }
  SpMat A(nrows, ncols);
  A.setFromTriplets(triplets.begin(), triplets.end());
  return A;
}

SpMat extract(const SpMat& A, const IndexSet& rows, const IndexSet& cols) {
  if (!rows.empty() && rows.ids().back() >= A.rows()) {
    throw Error("extract: row index out of range");
  }
  if (!cols.empty() && cols.ids().back() >= A.cols()) {
    throw Error("extract: column index out of range");
  }
  std::vector<Index> rowpos(static_cast<size_t>(A.rows()), -1);
  for (Index k = 0; k < rows.size(); ++k) rowpos[static_cast<size_t>(rows[k])] = k;

  std::vector<Triplet> trips;
  for (Index cc = 0; cc < cols.size(); ++cc) {
    for (SpMat::InnerIterator it(A, cols[cc]); it; ++it) {
      const Index rp = rowpos[static_cast<size_t>(it.row())];
      if (rp >= 0) trips.emplace_back(rp, cc, it.value());
    }
  }
  SpMat B(rows.size(), cols.size());
  B.setFromTriplets(trips.begin(), trips.end());
  return B;
}

Vector gather(const Vector& v, const IndexSet& s) {
  Vector out(s.size());
  for (Index k = 0; k < s.size(); ++k) out[k] = v[s[k]];
  return out;
}

void scatter_into(Vector& dst, const IndexSet& s, const Vector& values) {
  if (values.size() != s.size()) throw Error("scatter_into: size mismatch");
  for (Index k = 0; k < s.size(); ++k) dst[s[k]] = values[k];
}

double max_abs(const SpMat& A) {
  double m = 0.0;
  for (Index c = 0; c < A.outerSize(); ++c) {
    for (SpMat::InnerIterator it(A, c); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

double symmetry_error(const SpMat& A) {
  if (A.rows() != A.cols()) throw Error("symmetry_error: matrix not square");
  SpMat D = A - SpMat(A.transpose());
  return max_abs(D);
}

Vector solve_spd(const SpMat& A, const Vector& b, double tol) {
  if (A.rows() != A.cols()) throw Error("solve_spd: matrix not square");
  if (b.size() != A.rows()) throw Error("solve_spd: rhs size mismatch");

  Eigen::SimplicialLLT<SpMat> llt(A);
  if (llt.info() != Eigen::Success) {
    // Classify the failure: negative pivots mean indefinite, otherwise the
    // matrix is (numerically) singular.
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
      const Vector d = ldlt.vectorD();
      if ((d.array() < 0.0).any()) {
        throw NotSpdError("solve_spd: matrix is not positive definite");
      }
    }
    throw SingularError("solve_spd: matrix is singular");
  }

  const double nb = b.norm();
  if (nb == 0.0) return Vector::Zero(A.rows());

  Vector x = llt.solve(b);
  for (int it = 0; it < 10; ++it) {
    Vector r = b - A * x;
    if (r.norm() <= tol * nb) return x;
    x += llt.solve(r);
  }
  if ((b - A * x).norm() <= tol * nb) return x;
  throw SingularError("solve_spd: iterative refinement stalled above tolerance");
}

SaddleFactorization::SaddleFactorization(const SpMat& K, const SpMat& C)
    : nk_(K.rows()), mc_(C.rows()), K_(K), C_(C) {
  if (K.rows() != K.cols()) throw Error("solve_saddle: K not square");
  if (C.cols() != K.rows()) throw Error("solve_saddle: C column count mismatch");
  eps_ = 1e-12 * max_abs(K_);
  if (eps_ == 0.0) eps_ = 1e-12;
  factor(false);
  if (!ldlt_ || ldlt_->info() != Eigen::Success) {
    factor(true);
    regularized_ = true;
    if (ldlt_->info() != Eigen::Success) {
      throw SingularError("solve_saddle: block factorization failed");
    }
  }
}

void SaddleFactorization::factor(bool regularized) {
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(K_.nonZeros() + 2 * C_.nonZeros() + mc_));
  for (Index c = 0; c < K_.outerSize(); ++c) {
    for (SpMat::InnerIterator it(K_, c); it; ++it) {
      trips.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Index c = 0; c < C_.outerSize(); ++c) {
    for (SpMat::InnerIterator it(C_, c); it; ++it) {
      trips.emplace_back(nk_ + it.row(), it.col(), it.value());
      trips.emplace_back(it.col(), nk_ + it.row(), it.value());
    }
  }
  if (regularized) {
    for (Index q = 0; q < mc_; ++q) {
      trips.emplace_back(nk_ + q, nk_ + q, -eps_);
    }
  }
  block_ = SpMat(nk_ + mc_, nk_ + mc_);
  block_.setFromTriplets(trips.begin(), trips.end());
  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(block_);
}

bool SaddleFactorization::refine(Vector& x, const Vector& rhs) const {
  const double tol = 1e-9;
  const double nr = std::max(rhs.lpNorm<Eigen::Infinity>(), 1e-300);
  for (int it = 0; it < 10; ++it) {
    Vector res = rhs - block_ * x;
    const double cons = mc_ > 0
        ? (C_ * x.head(nk_)).lpNorm<Eigen::Infinity>()
        : 0.0;
    const double cons_scale = std::max(1.0, x.head(nk_).lpNorm<Eigen::Infinity>());
    if (res.lpNorm<Eigen::Infinity>() <= tol * nr && cons <= tol * cons_scale) {
      return true;
    }
    x += ldlt_->solve(res);
  }
  return false;
}

SaddleSolution SaddleFactorization::solve(const Vector& r) {
  if (r.size() != nk_) throw Error("solve_saddle: rhs size mismatch");
  Vector rhs = Vector::Zero(nk_ + mc_);
  rhs.head(nk_) = r;
  if (r.lpNorm<Eigen::Infinity>() == 0.0) {
    return {Vector::Zero(nk_), Vector::Zero(mc_), regularized_};
  }
  Vector x = ldlt_->solve(rhs);
  if (!refine(x, rhs)) {
    if (!regularized_) {
      factor(true);
      regularized_ = true;
      if (ldlt_->info() != Eigen::Success) {
        throw SingularError("solve_saddle: block factorization failed");
      }
      x = ldlt_->solve(rhs);
      if (refine(x, rhs)) {
        return {x.head(nk_), x.tail(mc_), regularized_};
      }
    }
    throw SingularError("solve_saddle: residual stalled above tolerance");
  }
  return {x.head(nk_), x.tail(mc_), regularized_};
}

SaddleSolution solve_saddle(const SpMat& K, const SpMat& C, const Vector& r) {
  SaddleFactorization fact(K, C);
  return fact.solve(r);
}

void write_coordinates(const SpMat& A, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("write_coordinates: cannot open " + path);
  std::fprintf(f, "%" PRId64 " %" PRId64 " %" PRId64 "\n",
               static_cast<int64_t>(A.rows()), static_cast<int64_t>(A.cols()),
               static_cast<int64_t>(A.nonZeros()));
  for (Index c = 0; c < A.outerSize(); ++c) {
    for (SpMat::InnerIterator it(A, c); it; ++it) {
      std::fprintf(f, "%" PRId64 " %" PRId64 " %.17g\n",
                   static_cast<int64_t>(it.row()),
                   static_cast<int64_t>(it.col()), it.value());
    }
  }
  std::fclose(f);
}

SpMat read_coordinates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_coordinates: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error("read_coordinates: " + path + ": missing header line");
  }
  std::istringstream head(line);
  int64_t rows = 0, cols = 0, nnz = 0;
  if (!(head >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) {
    throw Error("read_coordinates: " + path + ": bad header '" + line + "'");
  }
  std::vector<Triplet> trips;
  trips.reserve(static_cast<size_t>(nnz));
  for (int64_t k = 0; k < nnz; ++k) {
    if (!std::getline(in, line)) {
      throw Error("read_coordinates: " + path + ": truncated at entry " +
                  std::to_string(k));
    }
    std::istringstream ls(line);
    int64_t r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v)) {
      throw Error("read_coordinates: " + path + ": bad entry line " +
                  std::to_string(k + 2) + ": '" + line + "'");
    }
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      throw Error("read_coordinates: " + path + ": index out of range at line " +
                  std::to_string(k + 2));
    }
    trips.emplace_back(r, c, v);
  }
  SpMat A(rows, cols);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

}  // namespace netlod
