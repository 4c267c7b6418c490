#pragma once

// Coarse quadrilateral grid over the unit square: bilinear basis evaluation,
// interpolated basis vectors, prolongation/restriction operators, transfer
// of fixed boundary conditions to coarse dofs, and patch index sets for the
// localized corrector solves.

#include "netlod/network.hpp"
#include "netlod/sparse.hpp"

#include <array>
#include <vector>

namespace netlod {

struct CoarseGrid {
  int R = 0;       ///< elements per side
  double H = 0.0;  ///< element size, 1/R
  int d = 2;       ///< dofs per coarse node (matches the network)
  Eigen::Matrix2Xd nodes;                      ///< coarse node positions
  std::vector<std::array<int, 4>> elements;    ///< corner nodes, ccw
  IndexSet fixed_coarse;                       ///< fixed coarse dofs
  IndexSet free_coarse;                        ///< complement

  int num_nodes() const { return static_cast<int>(nodes.cols()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  Index num_dofs() const { return static_cast<Index>(d) * num_nodes(); }
  Eigen::Vector2d element_center(int e) const;
};

/// Element containing p; points on element boundaries resolve to the
/// element with the smaller index.
int locate_element(const CoarseGrid& grid, const Eigen::Vector2d& p);

/// Uniform R x R grid; transfers the fixed fine dofs to fixed coarse dofs:
/// coarse dof i is fixed if some fixed fine dof j of the same component has
/// a node inside the support of the coarse basis function of i (strict
/// nonzero evaluation, no tolerance). Validates that every element contains
/// at least one network node and that the coarse grid is not finer than the
/// network.
CoarseGrid build_grid(int R, const Network& net, const BoundaryConditions& bc);

/// Tensor-product hat value of the coarse basis function of `coarse_dof`
/// at point p; exactly zero outside its support.
double eval_bilinear(const CoarseGrid& grid, Index coarse_dof,
                     const Eigen::Vector2d& p);

struct CoarseOperators {
  /// Interpolated basis vectors for ALL coarse dofs, one column each (n x m).
  SpMat basis_all;
  /// Prolongation: columns of basis_all restricted to free coarse dofs (n x m_H).
  SpMat prolongation;
  /// Restriction, the transpose of the prolongation (m_H x n).
  SpMat restriction;
};

/// Interpolates every coarse basis function onto the network dofs:
/// column i holds the coarse basis values at same-component network dofs.
/// Throws if the prolongation columns are not linearly independent.
CoarseOperators interpolate_basis(const CoarseGrid& grid, const Network& net);

/// Weighted interpolant sum_i (lambda_i^T v) lambda_i over free coarse dofs.
Vector coarse_interpolant(const CoarseOperators& ops, const Vector& v);

struct PatchIndex {
  double rho = 0.0;                ///< patch radius in units of H (inf = full)
  IndexSet free_fine;              ///< the free fine dofs the patches draw from
  std::vector<IndexSet> fine;      ///< per element: free fine dofs in the patch
  std::vector<IndexSet> coarse;    ///< per element: free coarse dofs whose basis
                                   ///< touches the patch dofs
};

/// Circular patches of radius rho*H around each element center (closed
/// ball). Fine membership is by node distance, intersected with the free
/// dofs; coarse membership contains every free coarse dof whose interpolated
/// basis vector has support inside the patch, so that patch-local solutions
/// remain in the detail space. rho = infinity selects everything.
PatchIndex build_patches(const CoarseGrid& grid, const Network& net,
                         const CoarseOperators& ops,
                         const BoundaryConditions& bc, double rho);

}  // namespace netlod
