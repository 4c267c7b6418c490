#include "netlod/sparse.hpp"

#include <doctest.h>

#include "support/oracles.hpp"

#include <cstdio>
#include <filesystem>

using namespace netlod;

namespace {

SpMat from_dense(const Eigen::MatrixXd& A) {
  std::vector<Triplet> trips;
  for (Index r = 0; r < A.rows(); ++r) {
    for (Index c = 0; c < A.cols(); ++c) {
      if (A(r, c) != 0.0) trips.emplace_back(r, c, A(r, c));
    }
  }
  return assemble(trips, A.rows(), A.cols());
}

}  // namespace

TEST_CASE("assemble sums duplicate coordinates") {
  const SpMat A = assemble({{0, 0, 1.0}, {0, 0, 2.0}}, 1, 1);
  CHECK(A.coeff(0, 0) == 3.0);
}

TEST_CASE("assemble of empty triplets gives the zero matrix") {
  const SpMat A = assemble({}, 2, 2);
  CHECK(A.rows() == 2);
  CHECK(A.cols() == 2);
  CHECK(A.nonZeros() == 0);
}

TEST_CASE("assemble keeps a single off-diagonal entry one-sided") {
  const SpMat A = assemble({{0, 1, 5.0}}, 2, 2);
  CHECK(A.coeff(0, 1) == 5.0);
  CHECK(A.coeff(1, 0) == 0.0);
}

TEST_CASE("assemble rejects out-of-range indices") {
  CHECK_THROWS_AS(assemble({{2, 0, 1.0}}, 2, 2), Error);
  CHECK_THROWS_AS(assemble({{0, -1, 1.0}}, 2, 2), Error);
}

TEST_CASE("IndexSet enforces strict ascent") {
  CHECK_THROWS_AS(IndexSet::from_sorted({1, 1, 2}), Error);
  CHECK_THROWS_AS(IndexSet::from_sorted({2, 1}), Error);
  const IndexSet s = IndexSet::from_unsorted({3, 1, 3, 0});
  CHECK(s.size() == 3);
  CHECK(s.position(3) == 2);
  CHECK(s.position(2) == -1);
  const IndexSet c = IndexSet::complement_of(s, 5);
  CHECK(c.ids() == std::vector<Index>{2, 4});
}

TEST_CASE("extract restricts the identity") {
  const SpMat I3 = from_dense(Eigen::MatrixXd::Identity(3, 3));
  const SpMat sub = extract(I3, IndexSet::from_sorted({0, 2}), IndexSet::from_sorted({0, 2}));
  CHECK(oracles::to_dense(sub).isApprox(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("extract with all indices is the identity operation") {
  oracles::Rng rng(11);
  const SpMat A = oracles::random_spd(6, rng);
  const SpMat B = extract(A, IndexSet::all(6), IndexSet::all(6));
  CHECK(oracles::to_dense(B).isApprox(oracles::to_dense(A)));
}

TEST_CASE("extract picks single entries") {
  Eigen::MatrixXd A(2, 2);
  A << 1, 2, 3, 4;
  const SpMat sub = extract(from_dense(A), IndexSet::from_sorted({1}), IndexSet::from_sorted({0}));
  CHECK(sub.rows() == 1);
  CHECK(sub.cols() == 1);
  CHECK(sub.coeff(0, 0) == 3.0);
}

TEST_CASE("extract of an extraction is idempotent") {
  oracles::Rng rng(7);
  const SpMat A = oracles::random_spd(12, rng);
  const IndexSet rows = IndexSet::from_sorted({0, 3, 4, 9});
  const IndexSet cols = IndexSet::from_sorted({1, 2, 11});
  const SpMat B = extract(A, rows, cols);
  const SpMat C = extract(B, IndexSet::all(B.rows()), IndexSet::all(B.cols()));
  CHECK(oracles::to_dense(B).isApprox(oracles::to_dense(C)));
  CHECK_THROWS_AS(extract(A, IndexSet::from_sorted({12}), cols), Error);
}

TEST_CASE("solve_spd on diagonal and hand-eliminated systems") {
  const SpMat A = from_dense(2.0 * Eigen::MatrixXd::Identity(2, 2));
  Vector b(2);
  b << 2.0, 4.0;
  CHECK(solve_spd(A, b).isApprox(Vector{{1.0, 2.0}}));

  Eigen::MatrixXd M(2, 2);
  M << 2, 1, 1, 2;
  Vector b2(2);
  b2 << 3.0, 3.0;
  CHECK(solve_spd(from_dense(M), b2).isApprox(Vector{{1.0, 1.0}}));

  const SpMat I2 = from_dense(Eigen::MatrixXd::Identity(2, 2));
  CHECK(solve_spd(I2, Vector::Zero(2)).norm() == 0.0);
}

TEST_CASE("solve_spd matches the dense elimination oracle on random SPD systems") {
  oracles::Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 5 + static_cast<Index>(trial * 2);
    const SpMat A = oracles::random_spd(n, rng);
    const Vector b = rng.vector(n);
    const Vector x = solve_spd(A, b);
    const Vector y = oracles::dense_solve(oracles::to_dense(A), b);
    REQUIRE((x - y).lpNorm<Eigen::Infinity>() <= 1e-8 * y.lpNorm<Eigen::Infinity>() + 1e-12);
    REQUIRE((A * x - b).norm() <= 1e-10 * b.norm());
  }
}

TEST_CASE("solve_spd distinguishes indefinite from singular matrices") {
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_spd(from_dense(indef), Vector::Ones(2)), NotSpdError);

  Eigen::MatrixXd sing(2, 2);
  sing << 1, 1, 1, 1;
  CHECK_THROWS_AS(solve_spd(from_dense(sing), Vector::Ones(2)), SingularError);
}

TEST_CASE("solve_saddle reproduces hand-solved systems") {
  const SpMat K = from_dense(Eigen::MatrixXd::Identity(2, 2));
  const SpMat C = assemble({{0, 0, 1.0}}, 1, 2);
  Vector r(2);
  r << 1.0, 1.0;
  const SaddleSolution sol = solve_saddle(K, C, r);
  CHECK(sol.phi.isApprox(Vector{{0.0, 1.0}}, 1e-9));
  CHECK(sol.eta.isApprox(Vector{{1.0}}, 1e-9));

  const SpMat K2 = from_dense(2.0 * Eigen::MatrixXd::Identity(2, 2));
  const SpMat C2 = assemble({{0, 0, 1.0}, {0, 1, 1.0}}, 1, 2);
  Vector r2(2);
  r2 << 2.0, 0.0;
  const SaddleSolution sol2 = solve_saddle(K2, C2, r2);
  CHECK(sol2.phi.isApprox(Vector{{0.5, -0.5}}, 1e-9));
  CHECK(sol2.eta.isApprox(Vector{{1.0}}, 1e-9));
}

TEST_CASE("solve_saddle with no constraints reduces to solve_spd") {
  oracles::Rng rng(5);
  const SpMat K = oracles::random_spd(8, rng);
  const Vector r = rng.vector(8);
  const SaddleSolution sol = solve_saddle(K, SpMat(0, 8), r);
  CHECK(sol.eta.size() == 0);
  CHECK(sol.phi.isApprox(solve_spd(K, r), 1e-9));
}

TEST_CASE("solve_saddle satisfies the constraint and block residual") {
  oracles::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 10;
    const Index mc = 3;
    const SpMat K = oracles::random_spd(n, rng);
    std::vector<Triplet> ct;
    for (Index q = 0; q < mc; ++q) {
      for (Index c = 0; c < n; ++c) ct.emplace_back(q, c, rng.uniform(-1.0, 1.0));
    }
    const SpMat C = assemble(ct, mc, n);
    const Vector r = rng.vector(n);
    const SaddleSolution sol = solve_saddle(K, C, r);
    REQUIRE((C * sol.phi).lpNorm<Eigen::Infinity>() <= 1e-9);
    const Vector res = K * sol.phi + SpMat(C.transpose()) * sol.eta - r;
    REQUIRE(res.lpNorm<Eigen::Infinity>() <= 1e-9 * r.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("solve_saddle regularizes rank-deficient constraints") {
  oracles::Rng rng(17);
  const SpMat K = oracles::random_spd(6, rng);
  std::vector<Triplet> ct;
  for (Index c = 0; c < 6; ++c) {
    const double v = rng.uniform(-1.0, 1.0);
    ct.emplace_back(0, c, v);
    ct.emplace_back(1, c, v);  // duplicated row
  }
  const SpMat C = assemble(ct, 2, 6);
  const Vector r = rng.vector(6);
  const SaddleSolution sol = solve_saddle(K, C, r);
  CHECK(sol.regularized);
  CHECK((C * sol.phi).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("solve_saddle reports truly singular blocks") {
  // K vanishes on the kernel of C, so the block system is singular.
  const SpMat K = assemble({{0, 0, 1.0}}, 2, 2);
  const SpMat C = assemble({{0, 0, 1.0}}, 1, 2);
  Vector r(2);
  r << 1.0, 1.0;
  CHECK_THROWS_AS(solve_saddle(K, C, r), SingularError);
}

TEST_CASE("coordinate text format round-trips") {
  oracles::Rng rng(77);
  const SpMat A = oracles::random_spd(9, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "netlod_coord_test.txt").string();
  write_coordinates(A, path);
  const SpMat B = read_coordinates(path);
  CHECK(symmetry_error(B) == symmetry_error(A));
  CHECK(oracles::to_dense(B).isApprox(oracles::to_dense(A)));
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_coordinates(path), Error);
}
