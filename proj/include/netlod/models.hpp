#pragma once

// Physics of the connectivity matrix K: the fiber-network force
// contributions (edge extension, angular deviation of edge pairs, Poisson
// effect of edge pairs), the Lame parameter mapping, elasticity assembly,
// and a scalar graph-Laplacian model for d = 1.
//
// Element matrices map local displacements to forces; the assembled
// operator is K = -sum(edge matrices) - sum(pair matrices), so that K is
// the (symmetric, positive semi-definite) stiffness operator of the
// governing equation -K u + F = 0.

#include "netlod/network.hpp"
#include "netlod/sparse.hpp"

#include <array>

namespace netlod {

/// 2D cross product with the out-of-plane axis: (x, y) x z = (y, -x).
inline Eigen::Vector2d cross_z(const Eigen::Vector2d& v) {
  return {v.y(), -v.x()};
}

struct EdgeGeometry {
  Eigen::Vector2d dir_i;  ///< unit direction from node i toward node j
  Eigen::Vector2d dir_j;  ///< -dir_i
  double length = 0.0;
};

EdgeGeometry edge_geometry(const Network& net, int edge);

/// Linearized length change of an edge under endpoint displacements.
inline double delta_length(const EdgeGeometry& geom, const Eigen::Vector2d& delta_i,
                           const Eigen::Vector2d& delta_j) {
  return (delta_j - delta_i).dot(geom.dir_i);
}

/// Force matrix of one edge over the dofs of its two nodes: forces = mat * u.
struct EdgeMatrix {
  std::array<Index, 4> dofs;
  Eigen::Matrix4d mat;
};

/// Force matrix of one edge pair over the dofs of its three nodes (i, j, l).
struct PairMatrix {
  std::array<Index, 6> dofs;
  Eigen::Matrix<double, 6, 6> mat;
};

/// Extension force of an edge: restores the edge length through the elastic
/// modulus k and cross-section w*z.
EdgeMatrix force_extension(const Network& net, const EdgeAttributes& attrs, int edge);

/// Angular force of an edge pair: two torques at the central node converted
/// to force couples, resisting the linearized angle change between the edges.
PairMatrix force_angular(const Network& net, const PairAttributes& attrs, int pair);

/// Poisson force of an edge pair: resists the combined length change of the
/// two edges; the coupling term feeds each edge's force with the other
/// edge's length change.
PairMatrix force_poisson(const Network& net, const EdgeAttributes& eattrs,
                         const PairAttributes& pattrs, int pair,
                         const EdgeIndexMap& edge_map);

/// Lame parameter fields, one value per node.
struct LameField {
  Vector l;
  Vector mu;
};

/// Maps nodal Lame fields to network model attributes with scale factor c:
///   k_ij   = (2*mu_mean + l_mean) / (5c)   per edge,
///   kappa  = mu_mean / (4c^2)              per pair (mean over its 2 edges),
///   eta    = (2*mu_j + l_j) / (5c)         per pair (central node),
///   gamma  = 2*l_j / (4*eta*c^2)           per pair.
/// Edge widths are set to c times the rest length. The angular coefficient
/// is stored as the product kappa * V with the volume factor V = half the
/// fiber volume w*L*z, averaged over the pair's two edges; on a regular grid
/// this makes the model consistent with the 2D linear elasticity limit.
std::pair<EdgeAttributes, PairAttributes> map_lame(const Network& net,
                                                   const LameField& field, double c);

/// Scatters a local element matrix into a global triplet stream.
template <typename Derived, size_t N>
inline void add_scaled_element(std::vector<Triplet>& trips,
                               const std::array<Index, N>& dofs,
                               const Eigen::MatrixBase<Derived>& m, double scale) {
  for (size_t r = 0; r < N; ++r) {
    for (size_t c = 0; c < N; ++c) {
      const double v = m(static_cast<Index>(r), static_cast<Index>(c));
      if (v != 0.0) trips.emplace_back(dofs[r], dofs[c], scale * v);
    }
  }
}

/// n x n stiffness matrix of the fiber model (d = 2).
SpMat assemble_elasticity(const Network& net, const EdgeAttributes& eattrs,
                          const PairAttributes& pattrs);

/// Weighted graph Laplacian (d = 1): K_ii = sum_j w_ij, K_ij = -w_ij.
SpMat assemble_laplacian(const Network& net, const Vector& edge_weights);

}  // namespace netlod
