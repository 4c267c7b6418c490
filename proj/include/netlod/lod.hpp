#pragma once

// The multiscale engine: element-wise splitting of K, localized corrector
// solves on patches, multiscale basis and global solve, fine-scale reference
// solve, non-zero Dirichlet correction, and the energy/l2 norms.

#include "netlod/coarse.hpp"
#include "netlod/models.hpp"
#include "netlod/network.hpp"
#include "netlod/sparse.hpp"

#include <vector>

namespace netlod {

/// Element-wise decomposition K = sum_E K_E. Each edge contribution is
/// owned by the element containing the edge midpoint, each pair contribution
/// by the element containing its central node; boundary ties go to the
/// element with the smaller index.
struct ElementSplit {
  Index n = 0;
  std::vector<std::vector<Triplet>> element_triplets;
  std::vector<int> edge_owner;
  std::vector<int> pair_owner;
};

ElementSplit split_elements(const Network& net, const EdgeAttributes& eattrs,
                            const PairAttributes& pattrs, const CoarseGrid& grid);

ElementSplit split_elements_laplacian(const Network& net, const Vector& edge_weights,
                                      const CoarseGrid& grid);

/// Reassembles sum_E K_E; equals the direct assembly up to summation order.
SpMat assemble_from_split(const ElementSplit& split);

/// Corrector vectors, one column per coarse dof (n x m); columns are only
/// meaningful where `computed` is set.
struct CorrectorSet {
  SpMat columns;
  std::vector<char> computed;
};

/// Localized corrector piece for one (element, coarse dof): solves the patch
/// saddle-point system
///   [ K(N_E,N_E)  C^T ] [phi]   [K_E(N_E,:) lambda_i]
///   [ C            0  ] [eta] = [0]
/// and returns phi zero-extended to the full dof space. Returns zero without
/// solving when the right-hand side vanishes.
Vector solve_corrector(const SpMat& K, const ElementSplit& split,
                       const CoarseGrid& grid, const CoarseOperators& ops,
                       const PatchIndex& patches, int element, Index coarse_dof);

/// Correctors phi_i = sum_E phi_i^E for every requested coarse dof. One patch
/// factorization per element serves all right-hand sides; elements run in
/// parallel, accumulation is deterministic.
CorrectorSet build_correctors(const SpMat& K, const ElementSplit& split,
                              const CoarseGrid& grid, const CoarseOperators& ops,
                              const PatchIndex& patches,
                              const std::vector<Index>& coarse_dofs);

/// Unlocalized corrector from the global saddle-point problem; the oracle
/// the localized correctors converge to.
Vector solve_corrector_global(const SpMat& K, const CoarseOperators& ops,
                              const IndexSet& free_fine, Index coarse_dof);

struct MultiscaleBasis {
  SpMat correctors;             ///< n x m, all coarse dofs
  std::vector<char> computed;   ///< per coarse dof
  SpMat B_ms;                   ///< n x m_H, columns lambda_i - phi_i over free dofs
};

/// Modified basis from computed correctors; with zero correctors this is the
/// plain coarse basis (the FEM baseline).
MultiscaleBasis build_basis(const CoarseOperators& ops, const CoarseGrid& grid,
                            CorrectorSet correctors);
MultiscaleBasis fem_basis(const CoarseOperators& ops, const CoarseGrid& grid);

struct Solution {
  Vector u;       ///< fine-scale vector, prescribed values on fixed dofs
  Vector coarse;  ///< coarse coefficients, when produced by a coarse solve
};

/// Galerkin solve in the multiscale space (homogeneous boundary data):
/// (B^T K B) U = B^T F, u = B U.
Solution solve_multiscale(const SpMat& K, const Vector& F, const MultiscaleBasis& basis);

/// Reference fine-scale solve by free-dof reduction:
/// K(N,N) u_N = F(N) - K(N,N_D) g, prescribed values reinserted.
Solution solve_full(const SpMat& K, const Vector& F, const BoundaryConditions& bc);

/// Least-squares fit of the prescribed boundary values by coarse nodal
/// coefficients: the alpha with g_H = sum_i alpha_i lambda_i matching the
/// prescribed data wherever it is representable.
Vector fit_boundary_coeffs(const CoarseOperators& ops, const BoundaryConditions& bc);

/// Displacement problem with non-zero prescribed values and F = 0: solves the
/// homogeneous multiscale problem with load -K g_H and adds back g_H and the
/// corrector combination -sum_i alpha_i phi_i. Warns if the prescribed data
/// is not representable by coarse nodal values.
Solution solve_displaced(const SpMat& K, const BoundaryConditions& bc,
                         const MultiscaleBasis& basis, const CoarseOperators& ops);

/// sqrt(v^T K v); tiny negative quadratic forms (>= -1e-12) clamp to zero,
/// anything below that is reported as an error.
double energy_norm(const SpMat& K, const Vector& v);
double l2_norm(const Vector& v);

/// Relative energy-norm corrector error against the global corrector for one
/// coarse dof, per patch radius.
std::vector<double> corrector_decay_errors(const SpMat& K, const ElementSplit& split,
                                           const Network& net, const CoarseGrid& grid,
                                           const CoarseOperators& ops,
                                           const BoundaryConditions& bc,
                                           Index coarse_dof,
                                           const std::vector<double>& rhos);

}  // namespace netlod
